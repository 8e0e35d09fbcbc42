// Batch driver: demos and experiments over the C library interface.
// Exit codes: 0 success, 1 invalid flags or runtime failure, 2 violated
// parameter constraint (the violated constraint is printed to stderr).

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "urk.h"

namespace {

int report_error(urk_status st) {
    std::fprintf(stderr, "error: %s\n", urk_last_error());
    return st == URK_EPARAM ? 2 : 1;
}

// CSV sink: stdout by default, --output file otherwise.
int emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::fputs(text.c_str(), stdout);
        return 0;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
        std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
        return 1;
    }
    return 0;
}

int emit_owned(char* csv, const std::string& path) {
    std::string text = csv ? csv : "";
    urk_string_free(csv);
    return emit(text, path);
}

struct SketchParams {
    uint64_t n = 0, k = 1, q = 3, oversample = 16, slack = 10, seed = 0;
};

void add_sketch_flags(CLI::App* cmd, SketchParams& p, bool n_required) {
    auto* n_opt = cmd->add_option("--n", p.n, "universe size");
    if (n_required) n_opt->required();
    cmd->add_option("--k", p.k, "indices to report");
    cmd->add_option("--q", p.q, "field modulus (odd prime)");
    cmd->add_option("--oversample", p.oversample, "recovery sparsity per reported index");
    cmd->add_option("--slack", p.slack, "extra sketch rows");
    cmd->add_option("--seed", p.seed, "shared random seed")->envname("URK_SEED");
}

// A deterministic promise instance (support(y) strictly inside support(x))
// for the demo round-trip; the experiment variants live in the library.
void demo_instance(uint64_t n, uint64_t seed, std::vector<uint8_t>& x, std::vector<uint8_t>& y) {
    std::mt19937_64 gen(seed);
    std::vector<uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    uint64_t wx = 1 + gen() % (n / 2);
    for (uint64_t i = 0; i < wx; ++i)
        std::swap(pool[i], pool[i + gen() % (n - i)]);
    x.assign(n, 0);
    y.assign(n, 0);
    uint64_t forced = gen() % wx;
    for (uint64_t i = 0; i < wx; ++i) {
        x[pool[i]] = 1;
        y[pool[i]] = (i != forced && (gen() & 1)) ? 1 : 0;
    }
}

int run_sketch_demo(const SketchParams& p, const std::string& query, uint64_t sample_seed,
                    const std::string& out_path) {
    urk_sketch* sk = nullptr;
    urk_status st = urk_sketch_create(p.n, p.k, p.q, p.oversample, p.slack, p.seed, &sk);
    if (st != URK_OK) return report_error(st);
    std::unique_ptr<urk_sketch, decltype(&urk_sketch_destroy)> guard(sk, &urk_sketch_destroy);

    // Stream format: one "index delta" pair per line; blank lines and
    // '#' comments are skipped.
    std::string line;
    uint64_t updates = 0;
    while (std::getline(std::cin, line)) {
        size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        uint64_t index = 0;
        int64_t delta = 0;
        if (!(ls >> index >> delta)) {
            std::fprintf(stderr, "error: bad stream line: %s\n", line.c_str());
            return 1;
        }
        st = urk_sketch_update(sk, index, delta);
        if (st != URK_OK) return report_error(st);
        ++updates;
    }

    std::vector<uint32_t> out(p.k);
    int64_t count = 0;
    if (query == "support-find")
        st = urk_sketch_support_find(sk, out.data(), out.size(), &count);
    else
        st = urk_sketch_l0_sample(sk, sample_seed, out.data(), out.size(), &count);
    if (st != URK_OK) return report_error(st);

    std::string csv = "# sketch-demo n=" + std::to_string(p.n) + " k=" + std::to_string(p.k) +
                      " q=" + std::to_string(p.q) + " oversample=" + std::to_string(p.oversample) +
                      " slack=" + std::to_string(p.slack) + " seed=" + std::to_string(p.seed) +
                      " query=" + query + " updates=" + std::to_string(updates) + "\nindex\n";
    for (int64_t i = 0; i < count; ++i) csv += std::to_string(out[i]) + "\n";
    csv += count < 0 ? "# status=fail\n" : "# status=ok count=" + std::to_string(count) + "\n";
    return emit(csv, out_path);
}

int run_ur_run(const SketchParams& p, const std::string& out_path) {
    urk_protocol* proto = nullptr;
    urk_status st = urk_protocol_create(p.n, p.k, p.q, p.oversample, p.slack, p.seed, &proto);
    if (st != URK_OK) return report_error(st);
    std::unique_ptr<urk_protocol, decltype(&urk_protocol_destroy)> guard(proto,
                                                                         &urk_protocol_destroy);

    std::vector<uint8_t> x, y;
    demo_instance(p.n, p.seed, x, y);

    uint8_t* msg = nullptr;
    uint64_t msg_len = 0, payload_bits = 0;
    st = urk_protocol_alice(proto, x.data(), x.size(), &msg, &msg_len, &payload_bits);
    if (st != URK_OK) return report_error(st);
    std::unique_ptr<uint8_t, decltype(&urk_buffer_free)> msg_guard(msg, &urk_buffer_free);

    std::vector<uint32_t> out(p.k);
    int64_t count = 0;
    st = urk_protocol_bob(proto, msg, msg_len, y.data(), y.size(), out.data(), out.size(),
                          &count);
    if (st != URK_OK) return report_error(st);

    std::string indices;
    for (int64_t i = 0; i < count; ++i) indices += (i ? " " : "") + std::to_string(out[i]);
    std::string csv = "# ur-run n=" + std::to_string(p.n) + " k=" + std::to_string(p.k) +
                      " q=" + std::to_string(p.q) + " oversample=" + std::to_string(p.oversample) +
                      " slack=" + std::to_string(p.slack) + " seed=" + std::to_string(p.seed) +
                      "\npayload_bits,message_bytes,status,indices\n" +
                      std::to_string(payload_bits) + "," + std::to_string(msg_len) + "," +
                      (count < 0 ? "fail" : "ok") + ",\"" + indices + "\"\n";
    return emit(csv, out_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"universal-relation sketches: protocol demos, streaming queries, encoding "
                 "harness, experiments"};
    app.require_subcommand(1);
    int rc = 0;

    // --- sketch-demo ---
    auto* demo = app.add_subcommand("sketch-demo", "ingest 'index delta' lines from stdin and "
                                                   "answer a support-find or sample query");
    SketchParams demo_params;
    std::string demo_query = "support-find";
    uint64_t demo_sample_seed = 0;
    std::string demo_out;
    add_sketch_flags(demo, demo_params, true);
    demo->add_option("--query", demo_query, "query kind")
        ->check(CLI::IsMember({"support-find", "sample"}));
    demo->add_option("--sample-seed", demo_sample_seed, "seed for the sample query");
    demo->add_option("--output,-o", demo_out, "write CSV here instead of stdout");
    demo->callback(
        [&] { rc = run_sketch_demo(demo_params, demo_query, demo_sample_seed, demo_out); });

    // --- ur-run ---
    auto* urrun = app.add_subcommand(
        "ur-run", "one protocol round-trip on a derived promise instance; prints payload bits");
    SketchParams urrun_params;
    std::string urrun_out;
    add_sketch_flags(urrun, urrun_params, true);
    urrun->add_option("--output,-o", urrun_out, "write CSV here instead of stdout");
    urrun->callback([&] { rc = run_ur_run(urrun_params, urrun_out); });

    // --- lb-encode / lb-decode ---
    struct LbFlags {
        uint64_t n = 0, log2_inv_delta = 0, seed = 0;
        std::string handle = "oracle";
        double delta_syn = 0.25;
        std::string path;
    };
    auto add_lb_flags = [](CLI::App* cmd, LbFlags& f) {
        cmd->add_option("--n", f.n, "universe size")->required();
        cmd->add_option("--log2-inv-delta", f.log2_inv_delta, "target log2(1/delta)")->required();
        cmd->add_option("--handle", f.handle,
                        "protocol handle: oracle, always-fail, iid, or sketch");
        cmd->add_option("--delta-syn", f.delta_syn, "synthetic failure rate for the iid handle");
        cmd->add_option("--seed", f.seed, "shared random seed")->envname("URK_SEED");
    };
    auto* lbe = app.add_subcommand("lb-encode", "encode the seed-derived m-subset to a file");
    LbFlags lbe_flags;
    add_lb_flags(lbe, lbe_flags);
    lbe->add_option("--out", lbe_flags.path, "output file")->required();
    lbe->callback([&] {
        char* summary = nullptr;
        urk_status st =
            urk_lb_encode_file(lbe_flags.n, lbe_flags.log2_inv_delta, lbe_flags.handle.c_str(),
                               lbe_flags.delta_syn, lbe_flags.seed, lbe_flags.path.c_str(),
                               &summary);
        if (st != URK_OK) {
            rc = report_error(st);
            return;
        }
        std::printf("%s\n", summary);
        urk_string_free(summary);
    });
    auto* lbd = app.add_subcommand("lb-decode",
                                   "decode an encoded file and verify it recovers the set");
    LbFlags lbd_flags;
    add_lb_flags(lbd, lbd_flags);
    lbd->add_option("--in", lbd_flags.path, "input file")->required();
    lbd->callback([&] {
        char* summary = nullptr;
        urk_status st =
            urk_lb_decode_file(lbd_flags.n, lbd_flags.log2_inv_delta, lbd_flags.handle.c_str(),
                               lbd_flags.delta_syn, lbd_flags.seed, lbd_flags.path.c_str(),
                               &summary);
        if (st != URK_OK) {
            rc = report_error(st);
            return;
        }
        std::printf("%s\n", summary);
        urk_string_free(summary);
    });

    // --- exp ---
    auto* exp = app.add_subcommand("exp", "statistical experiments (CSV output)");
    exp->require_subcommand(1);

    struct {
        uint64_t n = 64, k = 1, q = 3, slack = 10, trials = 300, seed = 0;
        std::vector<uint64_t> oversamples{4, 8};
        std::string out;
    } fr;
    auto* fr_cmd = exp->add_subcommand("failure-rate",
                                       "round-trip failure rate on promise instances");
    fr_cmd->add_option("--n", fr.n, "universe size");
    fr_cmd->add_option("--k", fr.k, "indices to report");
    fr_cmd->add_option("--q", fr.q, "field modulus");
    fr_cmd->add_option("--slack", fr.slack, "extra sketch rows");
    fr_cmd->add_option("--oversample", fr.oversamples, "oversample values (repeat or comma-list)")
        ->delimiter(',');
    fr_cmd->add_option("--trials", fr.trials, "trials per oversample");
    fr_cmd->add_option("--seed", fr.seed, "experiment seed")->envname("URK_SEED");
    fr_cmd->add_option("--output,-o", fr.out, "write CSV here instead of stdout");
    fr_cmd->callback([&] {
        char* csv = nullptr;
        urk_status st = urk_exp_failure_rate(fr.n, fr.k, fr.q, fr.slack, fr.oversamples.data(),
                                             fr.oversamples.size(), fr.trials, fr.seed, &csv);
        rc = st != URK_OK ? report_error(st) : emit_owned(csv, fr.out);
    });

    struct {
        std::vector<uint64_t> ns{256, 1024, 4096, 16384};
        uint64_t k = 4, q = 3, oversample = 16, slack = 10, seed = 0;
        std::string out;
    } ms;
    auto* ms_cmd = exp->add_subcommand("message-size", "payload bits against the closed form");
    ms_cmd->add_option("--n", ms.ns, "universe sizes (repeat or comma-list)")->delimiter(',');
    ms_cmd->add_option("--k", ms.k, "indices to report");
    ms_cmd->add_option("--q", ms.q, "field modulus");
    ms_cmd->add_option("--oversample", ms.oversample, "recovery sparsity per reported index");
    ms_cmd->add_option("--slack", ms.slack, "extra sketch rows");
    ms_cmd->add_option("--seed", ms.seed, "experiment seed")->envname("URK_SEED");
    ms_cmd->add_option("--output,-o", ms.out, "write CSV here instead of stdout");
    ms_cmd->callback([&] {
        char* csv = nullptr;
        urk_status st = urk_exp_message_size(ms.ns.data(), ms.ns.size(), ms.k, ms.q,
                                             ms.oversample, ms.slack, ms.seed, &csv);
        rc = st != URK_OK ? report_error(st) : emit_owned(csv, ms.out);
    });

    struct {
        uint64_t n = 32, support_size = 8, q = 3, oversample = 16, slack = 10, trials = 20000,
                 seed = 0;
        std::string out;
    } un;
    auto* un_cmd = exp->add_subcommand("uniformity", "l0-sample distribution over a fixed support");
    un_cmd->add_option("--n", un.n, "universe size");
    un_cmd->add_option("--support-size", un.support_size, "aggregate support size");
    un_cmd->add_option("--q", un.q, "field modulus");
    un_cmd->add_option("--oversample", un.oversample, "recovery sparsity");
    un_cmd->add_option("--slack", un.slack, "extra sketch rows");
    un_cmd->add_option("--trials", un.trials, "query trials");
    un_cmd->add_option("--seed", un.seed, "experiment seed")->envname("URK_SEED");
    un_cmd->add_option("--output,-o", un.out, "write CSV here instead of stdout");
    un_cmd->callback([&] {
        char* csv = nullptr;
        urk_status st = urk_exp_uniformity(un.n, un.support_size, un.q, un.oversample, un.slack,
                                           un.trials, un.seed, &csv);
        rc = st != URK_OK ? report_error(st) : emit_owned(csv, un.out);
    });

    struct {
        uint64_t n = 4096, log2_inv_delta = 64, trials = 200, seed = 0;
        std::string handle = "oracle";
        double delta_syn = 0.25;
        std::string out;
    } sv;
    auto* sv_cmd = exp->add_subcommand("savings", "per-trial encoding savings and bit accounting");
    sv_cmd->add_option("--n", sv.n, "universe size");
    sv_cmd->add_option("--log2-inv-delta", sv.log2_inv_delta, "target log2(1/delta)");
    sv_cmd->add_option("--handle", sv.handle, "oracle, always-fail, iid, or sketch");
    sv_cmd->add_option("--delta-syn", sv.delta_syn, "synthetic failure rate for the iid handle");
    sv_cmd->add_option("--trials", sv.trials, "encoder runs");
    sv_cmd->add_option("--seed", sv.seed, "experiment seed")->envname("URK_SEED");
    sv_cmd->add_option("--output,-o", sv.out, "write CSV here instead of stdout");
    sv_cmd->callback([&] {
        char* csv = nullptr;
        urk_status st = urk_exp_savings(sv.n, sv.log2_inv_delta, sv.handle.c_str(), sv.delta_syn,
                                        sv.trials, sv.seed, &csv);
        rc = st != URK_OK ? report_error(st) : emit_owned(csv, sv.out);
    });

    struct {
        uint64_t n = 4096, t = 3, trials = 1000000, seed = 0;
        std::string out;
    } ad;
    auto* ad_cmd = exp->add_subcommand("adaptivity", "correlated-query hit rate against the "
                                                     "information bound");
    ad_cmd->add_option("--n", ad.n, "universe size (power of two)");
    ad_cmd->add_option("--t", ad.t, "revealed bits (0..log2 n)");
    ad_cmd->add_option("--trials", ad.trials, "Monte Carlo trials");
    ad_cmd->add_option("--seed", ad.seed, "experiment seed")->envname("URK_SEED");
    ad_cmd->add_option("--output,-o", ad.out, "write CSV here instead of stdout");
    ad_cmd->callback([&] {
        char* csv = nullptr;
        urk_status st = urk_exp_adaptivity(ad.n, ad.t, ad.trials, ad.seed, &csv);
        rc = st != URK_OK ? report_error(st) : emit_owned(csv, ad.out);
    });

    struct {
        uint64_t kmax = 64;
        std::string out;
    } pc;
    auto* pc_cmd = exp->add_subcommand("pochhammer", "partial products against the 2^(5K) bound");
    pc_cmd->add_option("--kmax", pc.kmax, "largest K to check");
    pc_cmd->add_option("--output,-o", pc.out, "write CSV here instead of stdout");
    pc_cmd->callback([&] {
        char* csv = nullptr;
        urk_status st = urk_exp_pochhammer(pc.kmax, &csv);
        rc = st != URK_OK ? report_error(st) : emit_owned(csv, pc.out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
