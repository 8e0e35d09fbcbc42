#include "urk/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "urk/bigint.hpp"
#include "urk/errors.hpp"
#include "urk/lb.hpp"
#include "urk/prf.hpp"
#include "urk/stats.hpp"
#include "urk/turnstile.hpp"

namespace urk {

namespace {

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// log2 of a positive big integer, via the top 53 bits.
double log2_bigint(const bigint& x) {
    size_t bl = bitlength(x);
    if (bl <= 53) return std::log2(x.convert_to<double>());
    bigint top = x >> (bl - 53);
    return std::log2(top.convert_to<double>()) + static_cast<double>(bl - 53);
}

// A uniform random size-w subset of [0, n) by partial Fisher-Yates.
std::vector<uint32_t> random_subset(PrfStream& rng, uint32_t n, uint32_t w) {
    std::vector<uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (uint32_t i = 0; i < w; ++i)
        std::swap(pool[i], pool[i + rng.next_below(n - i)]);
    pool.resize(w);
    return pool;
}

} // namespace

ProtocolHandle make_named_handle(const std::string& name, uint32_t n, uint32_t k, uint64_t seed,
                                 double delta_syn) {
    if (name == "oracle") return make_stub(StubKind::oracle, n, k, seed);
    if (name == "always-fail") return make_stub(StubKind::always_fail, n, k, seed);
    if (name == "iid") return make_stub(StubKind::iid_failure, n, k, seed, delta_syn);
    if (name == "sketch") {
        ProtocolParams p;
        p.n = n;
        p.k = k;
        p.seed = seed;
        p.backend = SketchBackend::bucket;
        return make_protocol_handle(p);
    }
    throw param_error("unknown handle '" + name +
                      "' (expected oracle, always-fail, iid, or sketch)");
}

FailureRateReport failure_rate_experiment(uint32_t n, uint32_t k, uint32_t q, uint32_t slack,
                                          const std::vector<uint32_t>& oversamples,
                                          uint32_t trials, uint64_t seed) {
    if (n < 2 || k < 1 || oversamples.empty() || trials == 0)
        throw param_error("failure-rate needs n >= 2, k >= 1, oversamples, trials >= 1");

    std::vector<uint32_t> failures(oversamples.size(), 0);
    for (uint32_t trial = 0; trial < trials; ++trial) {
        PrfStream rng(seed, "fr-instance", trial);
        uint32_t wx = 1 + static_cast<uint32_t>(rng.next_below(n / 2));
        std::vector<uint32_t> supp = random_subset(rng, n, wx);
        uint32_t forced = supp[rng.next_below(wx)];

        std::vector<uint8_t> x(n, 0), y(n, 0);
        std::vector<uint32_t> diff;
        for (uint32_t i : supp) {
            x[i] = 1;
            y[i] = (i != forced && (rng.next() & 1)) ? 1 : 0;
            if (x[i] != y[i]) diff.push_back(i);
        }
        std::sort(diff.begin(), diff.end());
        size_t want = std::min<size_t>(k, diff.size());

        // One protocol seed per trial shared by all oversample values: the
        // level subsampling is then identical, and a wider recovery window
        // can only turn failures into successes.
        uint64_t proto_seed = prf64(seed, "fr-proto", trial);
        for (size_t oi = 0; oi < oversamples.size(); ++oi) {
            ProtocolParams p;
            p.n = n;
            p.k = k;
            p.q = q;
            p.oversample = oversamples[oi];
            p.slack = slack;
            p.seed = proto_seed;
            Protocol proto(p);
            auto ans = proto.bob(proto.alice(x), y);
            bool ok = ans && ans->size() == want &&
                      std::all_of(ans->begin(), ans->end(), [&](uint32_t i) {
                          return std::binary_search(diff.begin(), diff.end(), i);
                      });
            if (!ok) ++failures[oi];
        }
    }

    FailureRateReport rep;
    std::string csv = "# exp=failure-rate n=" + std::to_string(n) + " k=" + std::to_string(k) +
                      " q=" + std::to_string(q) + " slack=" + std::to_string(slack) +
                      " trials=" + std::to_string(trials) + " seed=" + std::to_string(seed) +
                      "\noversample,trials,failures,failure_rate\n";
    for (size_t oi = 0; oi < oversamples.size(); ++oi) {
        FailureRateRow row;
        row.oversample = oversamples[oi];
        row.trials = trials;
        row.failures = failures[oi];
        row.failure_rate = static_cast<double>(failures[oi]) / trials;
        rep.rows.push_back(row);
        csv += std::to_string(row.oversample) + "," + std::to_string(row.trials) + "," +
               std::to_string(row.failures) + "," + fmt_g(row.failure_rate) + "\n";
    }
    rep.csv = std::move(csv);
    return rep;
}

MessageSizeReport message_size_experiment(const std::vector<uint32_t>& ns, uint32_t k, uint32_t q,
                                          uint32_t oversample, uint32_t slack, uint64_t seed) {
    if (ns.empty()) throw param_error("message-size needs at least one n");

    MessageSizeReport rep;
    std::string csv = "# exp=message-size k=" + std::to_string(k) + " q=" + std::to_string(q) +
                      " oversample=" + std::to_string(oversample) +
                      " slack=" + std::to_string(slack) + " seed=" + std::to_string(seed) +
                      "\nn,k,q,oversample,levels,m_rows,payload_bits,closed_form_bits,exact_match,"
                      "ratio\n";
    for (uint32_t n : ns) {
        ProtocolParams p;
        p.n = n;
        p.k = k;
        p.q = q;
        p.oversample = oversample;
        p.slack = slack;
        p.seed = prf64(seed, "ms-proto", n);
        Protocol proto(p);

        std::vector<uint8_t> x(n, 0);
        PrfStream rng(seed, "ms-input", n);
        for (uint32_t i : random_subset(rng, n, std::min<uint32_t>(8, n / 2))) x[i] = 1;
        UrMessage msg = proto.alice(x);
        uint64_t payload = msg.payload_bits();
        std::vector<uint8_t> wire = serialize(msg);

        // Independent closed form, evaluated in exact integer arithmetic.
        uint32_t s = oversample * k;
        bigint rows_needed = binomial(n, 2 * s);
        uint32_t m_rows = 2 * s + ceil_log_base(q, rows_needed) + slack;
        bigint qm = 1;
        for (uint32_t i = 0; i < m_rows; ++i) qm *= q;
        uint64_t per_level = bitlength(qm - 1);
        uint32_t levels = static_cast<uint32_t>(std::bit_width(static_cast<uint64_t>(n / k))) - 1;
        uint64_t closed = static_cast<uint64_t>(levels + 1) * per_level;

        MessageSizeRow row;
        row.n = n;
        row.k = k;
        row.q = q;
        row.oversample = oversample;
        row.levels = levels;
        row.m_rows = m_rows;
        row.payload_bits = payload;
        row.closed_form_bits = closed;
        double lg = std::log2(static_cast<double>(n) / k);
        row.ratio = static_cast<double>(payload) / (k * lg * lg);
        row.exact_match = payload == closed && m_rows == proto.m_rows() &&
                          wire.size() == 52 + (payload + 7) / 8;
        rep.rows.push_back(row);
        csv += std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(q) + "," +
               std::to_string(oversample) + "," + std::to_string(levels) + "," +
               std::to_string(m_rows) + "," + std::to_string(payload) + "," +
               std::to_string(closed) + "," + (row.exact_match ? "1" : "0") + "," +
               fmt_g(row.ratio) + "\n";
    }
    rep.csv = std::move(csv);
    return rep;
}

UniformityReport uniformity_experiment(uint32_t n, uint32_t support_size, uint32_t q,
                                       uint32_t oversample, uint32_t slack, uint32_t trials,
                                       uint64_t seed) {
    if (support_size < 2 || support_size > n / 2)
        throw param_error("uniformity needs 2 <= support_size <= n/2");
    if (trials < support_size) throw param_error("uniformity needs trials >= support_size");

    std::vector<uint32_t> support = seeded_permutation(seed, "unif-support", n);
    support.resize(support_size);
    std::sort(support.begin(), support.end());

    UniformityReport rep;
    rep.support = support;
    rep.counts.assign(support_size, 0);
    rep.trials = trials;

    for (uint32_t trial = 0; trial < trials; ++trial) {
        ProtocolParams p;
        p.n = n;
        p.k = 1;
        p.q = q;
        p.oversample = oversample;
        p.slack = slack;
        p.seed = prf64(seed, "unif-proto", trial);
        TurnstileSketch sk(p);
        for (uint32_t i : support) sk.update(i, +1);
        auto sample = l0_sample_k(sk, prf64(seed, "unif-sample", trial));
        if (!sample || sample->size() != 1) {
            ++rep.failures;
            continue;
        }
        auto it = std::lower_bound(support.begin(), support.end(), (*sample)[0]);
        if (it == support.end() || *it != (*sample)[0]) {
            ++rep.failures; // an off-support sample would be a recovery bug
            continue;
        }
        ++rep.counts[static_cast<size_t>(it - support.begin())];
    }

    uint64_t kept = trials - rep.failures;
    rep.expected = static_cast<double>(kept) / support_size;
    std::vector<double> expected(support_size, rep.expected);
    rep.chi2 = chi_square_stat(rep.counts, expected);
    rep.p_value = chi_square_p(rep.chi2, support_size - 1);

    std::string csv = "# exp=uniformity n=" + std::to_string(n) +
                      " support_size=" + std::to_string(support_size) + " q=" + std::to_string(q) +
                      " oversample=" + std::to_string(oversample) +
                      " slack=" + std::to_string(slack) + " trials=" + std::to_string(trials) +
                      " seed=" + std::to_string(seed) + "\nelement,count,expected\n";
    for (size_t i = 0; i < support.size(); ++i)
        csv += std::to_string(support[i]) + "," + std::to_string(rep.counts[i]) + "," +
               fmt_g(rep.expected) + "\n";
    csv += "# chi2=" + fmt_g(rep.chi2) + " p_value=" + fmt_g(rep.p_value) +
           " failures=" + std::to_string(rep.failures) + "\n";
    rep.csv = std::move(csv);
    return rep;
}

SavingsReport savings_experiment(uint32_t n, uint32_t log2_inv_delta, const std::string& handle,
                                 double delta_syn, uint32_t trials, uint64_t seed) {
    if (trials == 0) throw param_error("savings needs trials >= 1");

    SavingsReport rep;
    std::string csv = "# exp=savings n=" + std::to_string(n) +
                      " log2_inv_delta=" + std::to_string(log2_inv_delta) + " handle=" + handle +
                      " delta_syn=" + fmt_g(delta_syn) + " trials=" + std::to_string(trials) +
                      " seed=" + std::to_string(seed) +
                      "\ntrial,sum_b,b_card,savings,message_bits,total_bits,lhs_bits,rhs_bits,"
                      "inequality_ok\n";

    double sum_savings = 0.0, sum_total = 0.0;
    bool all_ok = true;
    for (uint32_t trial = 0; trial < trials; ++trial) {
        uint64_t ts = prf64(seed, "savings-trial", trial);
        LbParams params = lb_params(n, log2_inv_delta, ts);
        ProtocolHandle H = make_named_handle(handle, n, 1, prf64(ts, "handle-seed"), delta_syn);
        std::vector<uint32_t> S = seeded_permutation(ts, "lb-set", n);
        S.resize(params.m);
        std::sort(S.begin(), S.end());

        EncoderOutput out = enc(S, H, params);
        SavingsRow row;
        row.trial = trial;
        row.sum_b = static_cast<uint32_t>(
            std::count(out.b.begin(), out.b.end(), static_cast<uint8_t>(1)));
        row.b_card = static_cast<uint32_t>(out.coded_set.size());
        row.savings = params.m - row.b_card;
        row.message_bits = out.message_bits;
        row.total_bits = encoding_bit_length(out, n);
        row.lhs_bits =
            log2_bigint(binomial(n, params.m)) - log2_bigint(binomial(n, row.b_card));
        row.rhs_bits = row.savings * std::log2(static_cast<double>(n) / params.m - 1.0);
        row.inequality_ok = row.lhs_bits + 1e-9 >= row.rhs_bits;

        sum_savings += row.savings;
        sum_total += static_cast<double>(row.total_bits);
        all_ok = all_ok && row.inequality_ok;
        rep.rows.push_back(row);
        csv += std::to_string(row.trial) + "," + std::to_string(row.sum_b) + "," +
               std::to_string(row.b_card) + "," + std::to_string(row.savings) + "," +
               std::to_string(row.message_bits) + "," + std::to_string(row.total_bits) + "," +
               fmt_g(row.lhs_bits) + "," + fmt_g(row.rhs_bits) + "," +
               (row.inequality_ok ? "1" : "0") + "\n";
    }
    rep.mean_savings = sum_savings / trials;
    rep.mean_total_bits = sum_total / trials;
    rep.all_ok = all_ok;
    csv += "# mean_savings=" + fmt_g(rep.mean_savings) +
           " mean_total_bits=" + fmt_g(rep.mean_total_bits) + "\n";
    rep.csv = std::move(csv);
    return rep;
}

AdaptivityReport adaptivity_experiment(uint32_t n, uint32_t t, uint64_t trials, uint64_t seed) {
    if (n < 2 || (n & (n - 1)) != 0) throw param_error("adaptivity needs n a power of two >= 2");
    uint32_t log2n = static_cast<uint32_t>(std::bit_width(static_cast<uint64_t>(n))) - 1;
    if (t > log2n) throw param_error("adaptivity needs 0 <= t <= log2 n");
    if (trials == 0) throw param_error("adaptivity needs trials >= 1");

    // Copy X with probability exactly t/log2(n): compare a 64-bit draw
    // against floor(t * 2^64 / log2(n)).
    bool always_copy = t == log2n;
    uint64_t threshold =
        always_copy ? 0
                    : static_cast<uint64_t>((static_cast<unsigned __int128>(t) << 64) / log2n);

    PrfStream rng(seed, "adaptivity");
    uint64_t hits = 0;
    for (uint64_t i = 0; i < trials; ++i) {
        uint32_t x = static_cast<uint32_t>(rng.next_below(n));
        uint32_t y = (always_copy || rng.next() < threshold)
                         ? x
                         : static_cast<uint32_t>(rng.next_below(n));
        if (x == y) ++hits;
    }

    long double p = static_cast<long double>(t) / log2n;
    long double q0 = p + (1 - p) / n;
    long double q1 = (1 - p) / n;
    long double mi_exact = log2n + q0 * std::log2(q0);
    if (q1 > 0) mi_exact += static_cast<long double>(n - 1) * q1 * std::log2(q1);
    long double delta = 1.0L / n;
    long double h2 = -(delta * std::log2(delta) + (1 - delta) * std::log2(1 - delta));

    AdaptivityReport rep;
    rep.n = n;
    rep.t = t;
    rep.trials = trials;
    rep.hits = hits;
    rep.measured_p = static_cast<double>(hits) / static_cast<double>(trials);
    rep.mi_bits = t;
    rep.mi_exact_bits = static_cast<double>(mi_exact);
    rep.h2_delta = static_cast<double>(h2);
    rep.delta = static_cast<double>(delta);
    rep.analytic_rhs = static_cast<double>((t + h2) / log2n);
    rep.rhs_exact = static_cast<double>((mi_exact + h2) / log2n);
    rep.csv = "# exp=adaptivity n=" + std::to_string(n) + " t=" + std::to_string(t) +
              " trials=" + std::to_string(trials) + " seed=" + std::to_string(seed) +
              "\nn,t,trials,measured_p,analytic_rhs,mi_bits,mi_exact_bits,h2_delta,delta,"
              "rhs_exact\n" +
              std::to_string(n) + "," + std::to_string(t) + "," + std::to_string(trials) + "," +
              fmt_g(rep.measured_p) + "," + fmt_g(rep.analytic_rhs) + "," + fmt_g(rep.mi_bits) +
              "," + fmt_g(rep.mi_exact_bits) + "," + fmt_g(rep.h2_delta) + "," +
              fmt_g(rep.delta) + "," + fmt_g(rep.rhs_exact) + "\n";
    return rep;
}

PochhammerReport pochhammer_experiment(uint32_t kmax) {
    if (kmax < 1) throw param_error("pochhammer needs kmax >= 1");

    PochhammerReport rep;
    rep.all_pass = true;
    std::string csv = "# exp=pochhammer kmax=" + std::to_string(kmax) +
                      "\nK,product,log2_product,bound,pass\n";
    const long double ln2 = 0.6931471805599453094L;
    for (uint32_t K = 1; K <= kmax; ++K) {
        uint64_t J = 200ULL * K;
        long double acc = 0.0L; // sum of -ln(1 - 2^(-j/K))
        for (uint64_t j = 1; j <= J; ++j)
            acc -= std::log1p(-std::exp2(-static_cast<long double>(j) / K));
        PochhammerRow row;
        row.K = K;
        row.log2_product = static_cast<double>(acc / ln2);
        row.product = static_cast<double>(std::exp2(acc / ln2));
        row.bound_log2 = 5.0 * K;
        row.pass = row.log2_product <= row.bound_log2;
        rep.all_pass = rep.all_pass && row.pass;
        rep.rows.push_back(row);
        csv += std::to_string(K) + "," + fmt_g(row.product) + "," + fmt_g(row.log2_product) +
               "," + fmt_g(std::exp2(row.bound_log2)) + "," + (row.pass ? "1" : "0") + "\n";
    }
    rep.csv = std::move(csv);
    return rep;
}

} // namespace urk
