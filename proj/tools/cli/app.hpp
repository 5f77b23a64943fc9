#pragma once

// Command dispatcher for the omegalab tool. Kept in a header so the test
// suite can drive it in-process with string streams.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "omegalab/omegalab.hpp"

namespace omegalab::cli {

using json = nlohmann::ordered_json;

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;   // domain, precondition, range or precision error
inline constexpr int kExitResource = 2; // memory budget or output file
inline constexpr int kExitUsage = 64;   // malformed command line
inline constexpr int kExitInternal = 70;

/// Malformed flag values detected after CLI11 parsing (bad JSON, bad lambda, ...).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

struct Outcome {
    json result = json::object();
    std::optional<Table> table;
};

struct Globals {
    std::string format;
    std::string output;
    bool no_timing = false;
    unsigned threads = 0;
};

// ---------------------------------------------------------------------------
// Value conversion helpers
// ---------------------------------------------------------------------------

inline double num(long double v) { return static_cast<double>(v); }

inline std::string str(const Rational& q) { return q.get_str(); }

inline LinearFormSystem parse_forms(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError(std::string("--forms is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw UsageError("--forms must be a JSON array of {\"a\":..,\"b\":..} objects");
    std::vector<LinearForm> fs;
    for (const auto& f : j) {
        if (!f.is_object() || !f.contains("a") || !f.contains("b") || !f["a"].is_number_unsigned() ||
            !f["b"].is_number_unsigned())
            throw UsageError("each form needs nonnegative integer fields \"a\" and \"b\"");
        fs.push_back({f["a"].get<u64>(), f["b"].get<u64>()});
    }
    return LinearFormSystem(std::move(fs));
}

inline json forms_json(const LinearFormSystem& sys) {
    json a = json::array();
    for (const auto& f : sys.forms()) a.push_back({{"a", f.a}, {"b", f.b}});
    return a;
}

inline json series_json(const SingularSeriesValue& v) {
    return {{"value", num(v.value)},
            {"log_value", num(v.log_value)},
            {"error_bound", num(v.error_bound)},
            {"tail_bound", num(v.tail_bound)},
            {"truncation_prime", v.truncation_prime},
            {"lower", num(std::exp(v.log_value - v.error_bound))},
            {"upper", num(std::exp(v.log_value + v.error_bound))}};
}

inline json piece_json(const ProductPiece& p) {
    return {{"log_value", num(p.log_value)}, {"error_bound", num(p.error_bound)}, {"value", num(p.value())}};
}

inline Scale scale_from(std::optional<double> x, std::optional<double> log10_x) {
    if (log10_x) return Scale::power_of_ten(*log10_x);
    if (x) return Scale::from_value(*x);
    throw UsageError("one of --x or --log10-x is required");
}

inline json params_json(const ParamSet& ps) {
    return {{"x", ps.x_label},
            {"log10_x", num(ps.log10_x)},
            {"K", ps.K},
            {"L", ps.L},
            {"Q", ps.Q},
            {"g", ps.g},
            {"Q_prime", ps.Qprime},
            {"K_prime", ps.Kprime},
            {"log_X", num(ps.log_X)},
            {"X", num(ps.X)},
            {"V", ps.V},
            {"B_excluded", ps.B_excluded},
            {"square_divisibility", ps.square_divisibility()},
            {"coprime_shift", ps.coprime_shift()},
            {"q_size",
             {{"exponent", num(ps.q_size.exponent)},
              {"drift", num(ps.q_size.drift)},
              {"within_10_20", ps.q_size.within},
              {"advisory", ps.q_size.advisory}}}};
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// One subcommand: registers its flags, echoes them as config, and runs.
struct Command {
    std::string name;
    std::string description;
    std::string default_format = "json";
    std::function<void(CLI::App&)> add_options;
    std::function<json()> config;
    std::function<Outcome(const Globals&)> run;
};

struct Commands {
    // params / search-n0 scale
    std::optional<double> x, log10_x;
    u64 B = 1;
    // forms
    std::string forms;
    u64 P = 0;
    std::optional<unsigned> family_K;
    std::vector<u64> n_max_list;
    u64 n_max = 0;
    // search-n0
    std::optional<unsigned> K, L;
    std::optional<u64> Q;
    std::optional<double> theta2, theta3;
    // alpha / decompose
    u64 t = 2, N = 0, digits = 20;
    std::optional<u64> probe_a, probe_b;
    u64 probe_M = 64;
    u64 b = 1, n0 = 0;
    std::optional<u64> M;
    // brun-check
    std::optional<u64> m;
    unsigned V = 0, primes = 8, V_max = 8;
    // euler-identity
    double lo = 0, hi = 0;
    std::vector<u64> exclude;
    std::optional<unsigned> trunc_V;
    // shiu-mean
    std::string lambda;
    // window
    std::string profile = "sigma=0.5";
    double tmax = 200;
    unsigned tsteps = 200;
    // optimum
    double theta = 0.1;

    std::vector<Command> list();
};

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
template <typename T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

inline std::vector<Command> Commands::list() {
    std::vector<Command> cmds;

    cmds.push_back(
        {"params", "Derive K, L, Q, g, Q', K', X, V from the scale x", "json",
         [this](CLI::App& a) {
             auto* ox = a.add_option("--x", x, "scale x as a number");
             auto* oe = a.add_option("--log10-x", log10_x, "scale x = 10^E");
             ox->excludes(oe);
             a.add_option("--B", B, "excluded prime for the sieve (1 = none)")->capture_default_str();
         },
         [this] { return json{{"x", opt_json(x)}, {"log10_x", opt_json(log10_x)}, {"B", B}}; },
         [this](const Globals&) {
             Outcome o;
             o.result = params_json(derive_params(scale_from(x, log10_x), B));
             return o;
         }});

    cmds.push_back({"admissible", "Admissibility of a system of linear forms", "json",
                    [this](CLI::App& a) { a.add_option("--forms", forms, "JSON array of {a, b}")->required(); },
                    [this] { return json{{"forms", forms}}; },
                    [this](const Globals&) {
                        const auto sys = parse_forms(forms);
                        const auto adm = is_admissible(sys);
                        Outcome o;
                        o.result["forms"] = forms_json(sys);
                        o.result["K"] = sys.K();
                        o.result["admissible"] = adm.admissible;
                        o.result["witness"] = adm.witness ? json(*adm.witness) : json(nullptr);
                        json roots = json::object();
                        for (u64 p : primes_up_to(std::max<u64>(sys.K(), 7)))
                            roots[std::to_string(p)] = roots_mod_p(sys, p);
                        o.result["roots_mod_small_primes"] = roots;
                        try {
                            o.result["singular_series_threshold"] = singular_series_threshold(sys);
                        } catch (const DomainError&) {
                            o.result["singular_series_threshold"] = nullptr; // proportional forms
                        }
                        return o;
                    }});

    cmds.push_back(
        {"singular-series", "Certified truncated singular series", "json",
         [this](CLI::App& a) {
             auto* of = a.add_option("--forms", forms, "JSON array of {a, b}");
             auto* ok = a.add_option("--family-K", family_K, "use the forms nQ/k + 1, k <= K, with the piece split");
             of->excludes(ok);
             a.add_option("--P", P, "truncation prime (0 = max(threshold, 10^6))")->capture_default_str();
         },
         [this] { return json{{"forms", forms.empty() ? json(nullptr) : json(forms)}, {"family_K", opt_json(family_K)}, {"P", P}}; },
         [this](const Globals& g) {
             Outcome o;
             if (family_K) {
                 const u64 need = 2 * u64{*family_K} * *family_K;
                 const u64 trunc = P ? P : std::max<u64>(need, 1000000);
                 auto s = paper_singular_series(*family_K, trunc, g.threads);
                 o.result["K"] = *family_K;
                 o.result["series"] = series_json(s.total);
                 o.result["pieces"] = {{"p_le_K", piece_json(s.small)},
                                       {"K_lt_p_le_2K", piece_json(s.middle)},
                                       {"p_gt_2K", piece_json(s.large)}};
                 o.result["chain"] = {{"p_le_K_at_least_1", s.small_at_least_one()},
                                      {"K_lt_p_le_2K_at_least_K^-K", s.middle_at_least_K_pow_minus_K()},
                                      {"p_gt_2K_at_least_e^-K", s.large_at_least_exp_minus_K()},
                                      {"total_at_least_K^-2K", s.total_at_least_K_pow_minus_2K()}};
                 return o;
             }
             if (forms.empty()) throw UsageError("one of --forms or --family-K is required");
             const auto sys = parse_forms(forms);
             const u64 trunc = P ? P : std::max<u64>(singular_series_threshold(sys), 1000000);
             o.result["forms"] = forms_json(sys);
             o.result["series"] = series_json(singular_series(sys, trunc, g.threads));
             return o;
         }});

    cmds.push_back({"tuple-count", "Count n <= n_max with every form prime", "json",
                    [this](CLI::App& a) {
                        a.add_option("--forms", forms, "JSON array of {a, b}")->required();
                        a.add_option("--n-max", n_max, "upper end of n")->required();
                    },
                    [this] { return json{{"forms", forms}, {"n_max", n_max}}; },
                    [this](const Globals& g) {
                        const auto sys = parse_forms(forms);
                        Outcome o;
                        o.result["forms"] = forms_json(sys);
                        o.result["n_max"] = n_max;
                        o.result["count"] = count_prime_tuples(sys, n_max, g.threads);
                        return o;
                    }});

    cmds.push_back(
        {"hl-compare", "Tuple counts against the conjectured density", "json",
         [this](CLI::App& a) {
             a.add_option("--forms", forms, "JSON array of {a, b}")->required();
             a.add_option("--n-max", n_max_list, "one or more comma-separated n_max")->required()->delimiter(',');
             a.add_option("--P", P, "truncation prime for the series (0 = max(threshold, 10^6))")->capture_default_str();
         },
         [this] { return json{{"forms", forms}, {"n_max", n_max_list}, {"P", P}}; },
         [this](const Globals& g) {
             const auto sys = parse_forms(forms);
             Outcome o;
             Table t{{"n_max", "empirical", "predicted_crude", "predicted_integral", "ratio_crude", "ratio_integral"},
                     {}};
             json rows = json::array();
             std::optional<HLComparison> first;
             for (u64 n : n_max_list) {
                 auto r = hl_compare(sys, n, P ? P : 1000000, g.threads);
                 if (!first) first = r;
                 auto ratio = [&](long double v) { return r.ratios_defined ? json(num(v)) : json(nullptr); };
                 json row = {{"n_max", n},
                             {"empirical", r.empirical},
                             {"predicted_crude", ratio(r.predicted_crude)},
                             {"predicted_integral", ratio(r.predicted_integral)},
                             {"ratio_crude", ratio(r.ratio_crude)},
                             {"ratio_integral", ratio(r.ratio_integral)},
                             {"ratios_defined", r.ratios_defined}};
                 rows.push_back(row);
                 t.rows.push_back({row["n_max"], row["empirical"], row["predicted_crude"], row["predicted_integral"],
                                   row["ratio_crude"], row["ratio_integral"]});
             }
             o.result["forms"] = forms_json(sys);
             o.result["singular_series"] = series_json(first->singular_series);
             o.result["predicted_crude_label"] = "conjectured asymptotic: S * N / (log N)^K";
             o.result["predicted_integral_label"] =
                 "integral refinement (this tool's choice): S * integral_2^N dt / (log t)^K";
             o.result["rows"] = rows;
             o.table = t;
             return o;
         }});

    cmds.push_back(
        {"search-n0", "Smallest n0 with all three prime/omega conditions", "json",
         [this](CLI::App& a) {
             a.add_option("--K", K, "number of prime forms nQ/k + 1");
             a.add_option("--Q", Q, "modulus, k^2 | Q for k <= K");
             a.add_option("--L", L, "omega ceiling applies to K < k <= L");
             a.add_option("--theta2", theta2, "omega ceiling for K < k <= L");
             a.add_option("--theta3", theta3, "strict omega floor at k = K + 1");
             a.add_option("--n-max", n_max, "search n0 in [1, n_max]")->required();
             a.add_option("--log10-x", log10_x, "derive unset K, Q, L, theta2, theta3 from x = 10^E");
         },
         [this] {
             return json{{"K", opt_json(K)},           {"Q", opt_json(Q)},           {"L", opt_json(L)},
                         {"theta2", opt_json(theta2)}, {"theta3", opt_json(theta3)}, {"n_max", n_max},
                         {"log10_x", opt_json(log10_x)}};
         },
         [this](const Globals& g) {
             SearchSpec spec;
             std::optional<ParamSet> ps;
             std::optional<Thresholds> th;
             if (log10_x) {
                 const auto sc = Scale::power_of_ten(*log10_x);
                 ps = derive_params(sc);
                 th = default_thresholds(sc);
             }
             auto need = [&](auto& opt, auto fallback, const char* flag) {
                 if (opt) return *opt;
                 if (!ps) throw UsageError(std::string(flag) + " is required without --log10-x");
                 return static_cast<std::decay_t<decltype(*opt)>>(fallback);
             };
             spec.K = need(K, ps ? ps->K : 0, "--K");
             spec.Q = need(Q, ps ? ps->Q : 0, "--Q");
             spec.L = need(L, ps ? ps->L : 0, "--L");
             spec.theta2 = need(theta2, th ? th->theta2 : 0, "--theta2");
             spec.theta3 = need(theta3, th ? th->theta3 : 0, "--theta3");
             spec.n_max = n_max;
             auto r = search_n0(spec, {g.threads, 4096});
             Outcome o;
             o.result["spec"] = {{"K", spec.K},           {"Q", spec.Q},           {"L", spec.L},
                                 {"theta2", num(spec.theta2)}, {"theta3", num(spec.theta3)}, {"n_max", spec.n_max}};
             o.result["thresholds_note"] = "theta2 and theta3 are free parameters, not tied to n_max";
             o.result["found"] = r.witness.has_value();
             if (!r.witness) {
                 o.result["n0"] = nullptr;
                 return o;
             }
             const auto& w = *r.witness;
             o.result["n0"] = w.n0;
             json certs = json::array();
             for (const auto& c : w.prime_certificates) certs.push_back({{"k", c.k}, {"prime", c.value}});
             o.result["prime_certificates"] = certs;
             json table = json::array();
             for (const auto& [k, om] : w.omega_table) table.push_back({{"k", k}, {"omega", om}});
             o.result["omega_table"] = table;
             o.result["omega_K1"] = w.omega_K1;
             const auto chk = check_witness(spec, w);
             o.result["independent_check"] = {
                 {"valid", chk.valid}, {"failures", chk.failures}, {"additivity_holds", chk.additivity_holds}};
             return o;
         }});

    cmds.push_back(
        {"alpha", "Certified enclosure of sum omega(n)/t^n", "json",
         [this](CLI::App& a) {
             a.add_option("--t", t, "base t >= 2")->required();
             a.add_option("--N", N, "number of exact terms")->required();
             a.add_option("--digits", digits, "decimal digits, rounded outward")->capture_default_str();
             auto* pa = a.add_option("--probe-a", probe_a, "integrality probe: hypothetical alpha = a/b");
             auto* pb = a.add_option("--probe-b", probe_b, "integrality probe denominator");
             pa->needs(pb);
             pb->needs(pa);
             a.add_option("--probe-M", probe_M, "terms used to enclose T(N) in the probe")->capture_default_str();
         },
         [this] {
             return json{{"t", t},           {"N", N},           {"digits", digits},
                         {"probe_a", opt_json(probe_a)}, {"probe_b", opt_json(probe_b)}, {"probe_M", probe_M}};
         },
         [this](const Globals&) {
             const auto e = alpha_enclosure(t, N);
             const unsigned d = static_cast<unsigned>(digits);
             Outcome o;
             o.result = {{"t", t},
                         {"N", N},
                         {"partial", str(e.partial)},
                         {"tail_hi", str(e.tail_hi)},
                         {"lower", str(e.lower())},
                         {"upper", str(e.upper())},
                         {"lower_decimal", e.lower_decimal(d)},
                         {"upper_decimal", e.upper_decimal(d)},
                         {"width_decimal", to_decimal(e.width(), d, Rounding::Up)}};
             if (probe_a) {
                 const auto p = integrality_probe(t, *probe_a, *probe_b, N, probe_M);
                 o.result["integrality_probe"] = {
                     {"a", p.a},
                     {"b", p.b},
                     {"hypothetical_T", p.hypothetical.get_str()},
                     {"T_lower", str(p.T_lower)},
                     {"T_upper", str(p.T_upper)},
                     {"T_lower_decimal", to_decimal(p.T_lower, d, Rounding::Down)},
                     {"T_upper_decimal", to_decimal(p.T_upper, d, Rounding::Up)},
                     {"consistent", p.consistent},
                     {"enclosure_contains_integer", p.enclosure_contains_integer},
                     {"note", "exploratory: T(N) = a t^N - b t^N partial(N) would be an integer if alpha = a/b"}};
             }
             return o;
         }});

    cmds.push_back(
        {"decompose", "Split T(n0 Q) into S1 + S2 + S3 exactly", "json",
         [this](CLI::App& a) {
             a.add_option("--t", t, "base t >= 2")->capture_default_str();
             a.add_option("--b", b, "denominator b >= 1")->capture_default_str();
             a.add_option("--n0", n0, "n0")->required();
             a.add_option("--Q", Q, "modulus Q")->required();
             a.add_option("--K", K, "K")->required();
             a.add_option("--L", L, "L > K")->required();
             a.add_option("--M", M, "last exact term of S3 (default L + 64)");
         },
         [this] {
             return json{{"t", t}, {"b", b}, {"n0", n0}, {"Q", opt_json(Q)}, {"K", opt_json(K)}, {"L", opt_json(L)},
                         {"M", opt_json(M)}};
         },
         [this](const Globals&) {
             const u64 last = M ? *M : u64{*L} + 64;
             auto d = decompose_T(t, b, n0, *K, *Q, *L, last);
             Outcome o;
             o.result = {{"N", d.N},
                         {"M", d.M},
                         {"S1", str(d.S1)},
                         {"S2", str(d.S2)},
                         {"S3_truncated", str(d.S3_truncated)},
                         {"S3_tail_bound", str(d.S3_tail)},
                         {"lower_decimal", to_decimal(d.lower(), 20, Rounding::Down)},
                         {"upper_decimal", to_decimal(d.upper(), 20, Rounding::Up)},
                         {"direct_sum_matches", d.direct_matches()},
                         {"forms_prime", d.forms_prime}};
             if (d.s1_identity)
                 o.result["s1_identity"] = {{"rhs", str(d.s1_identity->rhs)}, {"holds", d.s1_identity->holds}};
             else
                 o.result["s1_identity"] = nullptr;
             return o;
         }});

    cmds.push_back(
        {"brun-check", "Brun truncated divisor sums and the parity sandwich", "json",
         [this](CLI::App& a) {
             a.add_option("--m", m, "squarefree m (omit for the exhaustive check)");
             a.add_option("--V", V, "truncation level for --m")->capture_default_str();
             a.add_option("--primes", primes, "exhaustive check over the first this many primes")->capture_default_str();
             a.add_option("--V-max", V_max, "exhaustive check for V = 0..V_max")->capture_default_str();
         },
         [this] { return json{{"m", opt_json(m)}, {"V", V}, {"primes", primes}, {"V_max", V_max}}; },
         [this](const Globals&) {
             Outcome o;
             auto side_ok = [](std::int64_t s, u64 mm, unsigned v) {
                 const std::int64_t ind = mm == 1 ? 1 : 0;
                 return v % 2 == 0 ? s >= ind : s <= ind;
             };
             if (m) {
                 const auto s = brun_truncated_divisor_sum(*m, V);
                 o.result = {{"m", *m},
                             {"V", V},
                             {"omega_m", omega(*m)},
                             {"sum", s},
                             {"indicator", *m == 1 ? 1 : 0},
                             {"side", V % 2 == 0 ? "upper bound (even V)" : "lower bound (odd V)"},
                             {"sandwich_holds", side_ok(s, *m, V)}};
                 return o;
             }
             if (primes > 15) throw UsageError("--primes must be at most 15");
             std::vector<u64> ps;
             for (u64 p = 2; ps.size() < primes; ++p)
                 if (is_prime(p)) ps.push_back(p);
             u64 cases = 0, violations = 0;
             for (u64 mask = 0; mask < (u64{1} << primes); ++mask) {
                 u64 mm = 1;
                 for (unsigned i = 0; i < primes; ++i)
                     if (mask >> i & 1) mm *= ps[i];
                 for (unsigned v = 0; v <= V_max; ++v) {
                     ++cases;
                     if (!side_ok(brun_truncated_divisor_sum(mm, v), mm, v)) ++violations;
                 }
             }
             o.result = {{"primes", ps}, {"V_max", V_max}, {"cases", cases}, {"violations", violations},
                         {"holds", violations == 0}};
             return o;
         }});

    cmds.push_back(
        {"euler-identity", "Divisor sum against Euler product over a prime interval", "json",
         [this](CLI::App& a) {
             a.add_option("--K", K, "K")->required();
             a.add_option("--lo", lo, "interval lower end (exclusive)")->required();
             a.add_option("--hi", hi, "interval upper end (inclusive)")->required();
             a.add_option("--exclude", exclude, "comma-separated excluded primes")->delimiter(',');
             a.add_option("--V", trunc_V, "also bound the error of truncating at omega(d) <= V");
         },
         [this] {
             return json{{"K", opt_json(K)}, {"lo", lo}, {"hi", hi}, {"exclude", exclude}, {"V", opt_json(trunc_V)}};
         },
         [this](const Globals&) {
             PrimeInterval I{lo, hi, std::set<u64>(exclude.begin(), exclude.end())};
             auto r = complete_sieve_product(*K, I);
             Outcome o;
             o.result = {{"prime_count", r.prime_count},
                         {"product", str(r.product)},
                         {"divisor_sum", r.divisor_sum ? json(str(*r.divisor_sum)) : json(nullptr)},
                         {"equal", r.equal},
                         {"brute_force_checked", r.divisor_sum.has_value()}};
             if (r.prime_count <= 64) o.result["primes"] = I.primes();
             if (trunc_V) {
                 auto tb = truncation_error_bound(*K, I, *trunc_V);
                 o.result["truncation"] = {
                     {"V", *trunc_V},
                     {"bound", num(tb.bound)},
                     {"bound_exact", tb.bound_exact ? json(str(*tb.bound_exact)) : json(nullptr)},
                     {"true_dropped", tb.true_dropped ? json(str(*tb.true_dropped)) : json(nullptr)},
                     {"dominates", tb.dominates}};
             }
             return o;
         }});

    cmds.push_back(
        {"shiu-mean", "Mean of lambda^omega(n) for n <= n_max", "json",
         [this](CLI::App& a) {
             a.add_option("--lambda", lambda, "p/q for an exact sum, or a decimal for a float sum")->required();
             a.add_option("--n-max", n_max_list, "one or more comma-separated n_max")->required()->delimiter(',');
         },
         [this] { return json{{"lambda", lambda}, {"n_max", n_max_list}}; },
         [this](const Globals& g) {
             std::optional<Rational> exact;
             long double real = 0;
             const bool rational = lambda.find_first_not_of("0123456789/") == std::string::npos;
             try {
                 if (rational) {
                     exact = Rational(lambda, 10);
                     exact->canonicalize();
                 } else {
                     std::size_t used = 0;
                     real = std::stold(lambda, &used);
                     if (used != lambda.size()) throw std::invalid_argument(lambda);
                 }
             } catch (const std::exception&) {
                 throw UsageError("--lambda must be p/q or a decimal number");
             }
             Outcome o;
             Table t{{"n_max", "value", "error_bound", "normalizer", "ratio"}, {}};
             json rows = json::array();
             for (u64 n : n_max_list) {
                 auto r = exact ? lambda_omega_mean(*exact, n, g.threads) : lambda_omega_mean(real, n, g.threads);
                 json row = {{"n_max", n},
                             {"exact", r.exact ? json(str(*r.exact)) : json(nullptr)},
                             {"value", num(r.value)},
                             {"error_bound", num(r.error_bound)},
                             {"normalizer", r.ratio_defined ? json(num(r.normalizer)) : json(nullptr)},
                             {"ratio", r.ratio_defined ? json(num(r.ratio)) : json(nullptr)},
                             {"omega_histogram", r.histogram}};
                 t.rows.push_back({row["n_max"], row["value"], row["error_bound"], row["normalizer"], row["ratio"]});
                 rows.push_back(std::move(row));
             }
             o.result["lambda"] = exact ? json(str(*exact)) : json(num(real));
             o.result["exact_arithmetic"] = exact.has_value();
             o.result["rows"] = rows;
             o.table = t;
             return o;
         }});

    cmds.push_back(
        {"window", "Smooth window: values, derivative growth and Mellin decay profile", "csv",
         [this](CLI::App& a) {
             a.add_option("--profile", profile, "sigma=<real>")->capture_default_str();
             a.add_option("--tmax", tmax, "largest t in the profile")->capture_default_str();
             a.add_option("--tsteps", tsteps, "number of t values, evenly spaced in (0, tmax]")->capture_default_str();
         },
         [this] { return json{{"profile", profile}, {"tmax", tmax}, {"tsteps", tsteps}}; },
         [this](const Globals& g) {
             const std::string key = "sigma=";
             if (profile.rfind(key, 0) != 0) throw UsageError("--profile must look like sigma=0.5");
             long double sigma;
             try {
                 std::size_t used = 0;
                 sigma = std::stold(profile.substr(key.size()), &used);
                 if (used != profile.size() - key.size()) throw std::invalid_argument(profile);
             } catch (const std::exception&) {
                 throw UsageError("--profile must look like sigma=0.5");
             }
             if (!(tmax > 0) || tsteps == 0) throw UsageError("--tmax must be positive and --tsteps at least 1");
             const auto w = build_window();
             std::vector<long double> ts;
             for (unsigned i = 1; i <= tsteps; ++i) ts.push_back(static_cast<long double>(tmax) * i / tsteps);
             auto p = decay_profile(w, sigma, ts, std::nullopt, g.threads);
             const auto m1 = mellin_transform(w, Complex(1, 0));
             const auto growth = derivative_growth(w);
             Outcome o;
             json rows = json::array();
             Table t{{"t", "abs_mellin", "envelope"}, {}};
             for (const auto& r : p.rows) {
                 rows.push_back({{"t", num(r.t)},
                                 {"re", num(r.value.real())},
                                 {"im", num(r.value.imag())},
                                 {"abs", num(r.magnitude)},
                                 {"error", num(r.error)},
                                 {"envelope", num(r.envelope)}});
                 t.rows.push_back({num(r.t), num(r.magnitude), num(r.envelope)});
             }
             json constants = json::array();
             for (std::size_t j = 1; j < growth.constant.size(); ++j)
                 constants.push_back({{"j", j}, {"max_abs", num(growth.max_abs[j])}, {"C_j", num(growth.constant[j])}});
             o.result = {{"W", {{"0.2", num(w(0.2L))}, {"1", num(w(1))}, {"4.1", num(w(4.1L))}}},
                         {"mellin_at_1", {{"value", num(m1.value.real())}, {"error", num(m1.error)}}},
                         {"derivative_growth", {{"constants", constants}, {"C", num(growth.C)}, {"non_growing", growth.non_growing}}},
                         {"profile",
                          {{"sigma", num(p.sigma)},
                           {"c", num(p.c)},
                           {"log_C", num(p.log_C)},
                           {"all_below_envelope", p.all_below_envelope},
                           {"rows", rows}}}};
             o.table = t;
             return o;
         }});

    cmds.push_back({"optimum", "Minimize lambda + theta log(1/lambda)", "json",
                    [this](CLI::App& a) { a.add_option("--theta", theta, "theta in (0, 1)")->capture_default_str(); },
                    [this] { return json{{"theta", theta}}; },
                    [this](const Globals&) {
                        if (!(theta > 0 && theta < 1)) throw DomainError("theta must lie in (0, 1)");
                        auto r = exponent_optimum(theta);
                        Outcome o;
                        o.result = {{"theta", theta},
                                    {"lambda_star", num(r.lambda_star)},
                                    {"f_min", num(r.f_min)},
                                    {"c0", num(r.c0)},
                                    {"iterations", r.iterations}};
                        return o;
                    }});

    return cmds;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline std::string csv_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    return v.dump();
}

// Leaf values of a JSON object as "a.b.c" -> value.
inline void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
    } else {
        out.emplace_back(prefix, j);
    }
}

inline void write_report(std::ostream& out, const std::string& format, const json& header, const Outcome* outcome,
                         const json* error) {
    if (format == "csv") {
        for (auto it = header.begin(); it != header.end(); ++it) out << "# " << it.key() << ": " << it.value().dump() << "\n";
        if (error) {
            out << "# error: " << error->dump() << "\n";
            return;
        }
        if (outcome->table) {
            const auto& t = *outcome->table;
            for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
            out << "\n";
            for (const auto& row : t.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
                out << "\n";
            }
        } else {
            std::vector<std::pair<std::string, json>> kv;
            flatten(outcome->result, "", kv);
            out << "key,value\n";
            for (const auto& [k, v] : kv) {
                std::string cell = csv_cell(v);
                if (cell.find(',') != std::string::npos) cell = "\"" + cell + "\"";
                out << k << "," << cell << "\n";
            }
        }
        return;
    }
    json doc = header;
    if (error)
        doc["error"] = *error;
    else
        doc["result"] = outcome->result;
    out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses args (without the program name), runs the subcommand and writes the
/// report to `out` (or to --output). Diagnostics for usage errors go to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"omegalab: exact and certified computations around omega(n), prime tuples and sieve identities",
                 "omegalab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    Globals g;
    app.add_option("--format", g.format, "json or csv (default depends on the command)")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--output", g.output, "write the report to this file instead of stdout");
    app.add_flag("--no-timing", g.no_timing, "omit timing from the report");
    app.add_option("--threads", g.threads, "worker threads (0 = all cores)")->capture_default_str();

    Commands state;
    auto cmds = state.list();
    std::vector<CLI::App*> subs;
    for (auto& c : cmds) {
        CLI::App* s = app.add_subcommand(c.name, c.description);
        s->fallthrough();
        c.add_options(*s);
        subs.push_back(s);
    }

    std::vector<std::string> argv_store{"omegalab"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::size_t which = 0;
    while (which < subs.size() && !subs[which]->parsed()) ++which;
    const Command& cmd = cmds[which];
    const std::string format = g.format.empty() ? cmd.default_format : g.format;

    json header;
    header["tool"] = "omegalab";
    header["version"] = kVersion;
    header["command"] = cmd.name;
    json config = cmd.config();
    config["format"] = format;
    config["threads"] = g.threads;
    config["output"] = g.output.empty() ? json(nullptr) : json(g.output);
    header["config"] = config;

    std::ofstream file;
    std::ostream* sink = &out;
    if (!g.output.empty()) {
        file.open(g.output);
        if (!file) {
            err << "cannot open output file " << g.output << "\n";
            return kExitResource;
        }
        sink = &file;
    }

    const auto start = std::chrono::steady_clock::now();
    auto timing = [&] {
        if (!g.no_timing)
            header["timing"] = {
                {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    };
    auto fail = [&](const std::string& code, const std::string& message, const std::string& context, int status) {
        timing();
        const json e = {{"code", code}, {"message", message}, {"context", context}};
        write_report(*sink, format, header, nullptr, &e);
        return status;
    };
    try {
        Outcome o = cmd.run(g);
        timing();
        write_report(*sink, format, header, &o, nullptr);
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ResourceError& e) {
        return fail(e.code(), e.what(), e.context(), kExitResource);
    } catch (const Error& e) {
        return fail(e.code(), e.what(), e.context(), kExitDomain);
    } catch (const std::bad_alloc&) {
        return fail("resource_error", "out of memory", "", kExitResource);
    } catch (const std::exception& e) {
        return fail("internal_error", e.what(), "", kExitInternal);
    }
}

} // namespace omegalab::cli
