// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include "medaudit/cli.hpp"
#include "medaudit/csv.hpp"
#include "medaudit/estimator.hpp"
#include "medaudit/hmda.hpp"
#include "medaudit/oracle.hpp"
#include "medaudit/parallel.hpp"
#include "medaudit/rng.hpp"
#include "medaudit/sensitivity.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

using namespace medaudit;

namespace {

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void info(const std::string& line) { std::printf("       info: %s\n", line.c_str()); }

// Every estimation run made by the suite, for the additivity criterion.
double worst_additivity = 0.0;
std::size_t estimation_runs = 0;

void record(const MediationEstimate& e) {
    worst_additivity = std::max(worst_additivity, std::abs(e.ide.estimate + e.iie.estimate - e.total_contrast));
    ++estimation_runs;
}

unsigned threads() { return std::min(4u, default_thread_count()); }

CreditDag scm_dag(const AuditDataset& d) { return standard_dag(d.w_names(), "a", d.m_names(), "y"); }

EstimatorConfig config_with_seed(std::uint64_t seed) {
    EstimatorConfig c;
    c.seed = seed;
    c.threads = threads();
    return c;
}

Outcome oracle_equivalence() {
    double worst_ide = 0, worst_iie = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto scm = random_scm(seed);
        const auto truth = oracle_effects(scm);
        const auto id = identified_effects(observable_law(scm));
        worst_ide = std::max(worst_ide, std::abs(id.ide - truth.ide));
        worst_iie = std::max(worst_iie, std::abs(id.iie - truth.iie));
    }
    // Context for the verdict: the same comparison without U -> M confounding,
    // and on the monotone family.
    double degenerate = 0, monotone = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ScmCardinalities one_u;
        one_u.u = 1;
        for (const auto& scm : {random_scm(seed, one_u), random_monotone_scm(seed)}) {
            const auto truth = oracle_effects(scm);
            const auto id = identified_effects(observable_law(scm));
            double& slot = scm.u_card == 1 ? degenerate : monotone;
            slot = std::max({slot, std::abs(id.ide - truth.ide), std::abs(id.iie - truth.iie)});
        }
    }
    info("SCMs with a single U state: worst gap " + fmt("%.2e", degenerate));
    info("monotone family (U -> M present): worst gap " + fmt("%.2e", monotone));
    const double worst = std::max(worst_ide, worst_iie);
    return {worst <= 1e-10, false,
            "worst |identified - oracle| IDE " + fmt("%.3e", worst_ide) + ", IIE " + fmt("%.3e", worst_iie) +
                " over 20 random SCMs (tol 1e-10)"};
}

Outcome monotone_bounds() {
    int ok = 0;
    double min_slack_direct = 1e9, min_slack_indirect = 1e9;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto e = oracle_effects(random_monotone_scm(seed));
        ok += e.ide <= e.nde && e.iie >= e.nie;
        min_slack_direct = std::min(min_slack_direct, e.nde - e.ide);
        min_slack_indirect = std::min(min_slack_indirect, e.iie - e.nie);
    }
    return {ok == 100, false,
            std::to_string(ok) + "/100 seeds with IDE <= NDE and IIE >= NIE; min slack " +
                fmt("%.2e", min_slack_direct) + " / " + fmt("%.2e", min_slack_indirect)};
}

Outcome consistency() {
    const auto scm = monotone_small_scm();
    const double truth = oracle_effects(scm).ide;
    const std::size_t sizes[3] = {10000, 30000, 100000};
    double mae[3] = {0, 0, 0}, bias[3] = {0, 0, 0};
    for (int s = 0; s < 3; ++s) {
        for (std::uint64_t rep = 0; rep < 20; ++rep) {
            const auto data = generate_dataset(scm, sizes[s], derive_seed(3000 + s, rep));
            const auto e = cross_fit_estimate(data, scm_dag(data), config_with_seed(derive_seed(3100 + s, rep)));
            record(e);
            mae[s] += std::abs(e.ide.estimate - truth) / 20;
            bias[s] += (e.ide.estimate - truth) / 20;
        }
        info("n=" + std::to_string(sizes[s]) + ": mean |error| " + fmt("%.5f", mae[s]) + ", mean error " +
             fmt("%+.5f", bias[s]));
    }
    const bool decreasing = mae[0] > mae[1] && mae[1] > mae[2];
    return {decreasing && mae[2] < 0.005, false,
            std::string("mean |AIPW IDE - oracle| ") + (decreasing ? "decreases" : "does not decrease") +
                " across n; " + fmt("%.4f", 100 * mae[2]) + " pp at n=100k (tol 0.5 pp)"};
}

Outcome double_robustness() {
    const auto scm = monotone_small_scm();
    const double truth = oracle_effects(scm).ide;
    const int reps = 5;
    const std::size_t n = 100000;
    double aipw_mu = 0, plug = 0, aipw_w = 0, ipw = 0;
    NuisanceConfig broken_mu;
    broken_mu.outcome.kind = LearnerKind::intercept_only;
    NuisanceConfig broken_weights;
    broken_weights.propensity.kind = LearnerKind::intercept_only;
    broken_weights.ratio.kind = LearnerKind::intercept_only;
    for (int rep = 0; rep < reps; ++rep) {
        const auto data = generate_dataset(scm, n, derive_seed(4000, rep));
        const auto folds = assign_folds(data, 5, derive_seed(4100, rep));
        const auto seed = derive_seed(4200, rep);
        const auto set_mu = fit_nuisances(data, folds, broken_mu, threads());
        aipw_mu += aipw_means(data, set_mu, folds, 25, seed, threads()).ide() / reps;
        plug += plug_in_means(data, set_mu, folds, 25, seed, threads()).ide() / reps;
        const auto set_w = fit_nuisances(data, folds, broken_weights, threads());
        aipw_w += aipw_means(data, set_w, folds, 25, seed, threads()).ide() / reps;
        ipw += weighting_means(data, set_w, folds, seed, threads()).ide() / reps;
    }
    const double b_aipw_mu = std::abs(aipw_mu - truth), b_plug = std::abs(plug - truth);
    const double b_aipw_w = std::abs(aipw_w - truth), b_ipw = std::abs(ipw - truth);
    info("outcome model broken: AIPW bias " + fmt("%.4f", 100 * b_aipw_mu) + " pp, plug-in bias " +
         fmt("%.4f", 100 * b_plug) + " pp");
    info("propensity and ratio broken: AIPW bias " + fmt("%.4f", 100 * b_aipw_w) + " pp, weighting bias " +
         fmt("%.4f", 100 * b_ipw) + " pp");
    const bool a = b_aipw_mu < 0.005 && b_plug >= 2 * std::max(b_aipw_mu, 0.005);
    const bool b = b_aipw_w < 0.005 && b_ipw >= 2 * std::max(b_aipw_w, 0.005);
    return {a && b, false,
            std::string("outcome-broken scenario ") + (a ? "ok" : "fails") + ", weights-broken scenario " +
                (b ? "ok" : "fails") + " (AIPW < 0.5 pp, baseline >= 2x; mean of 5 reps at n=100k)"};
}

Outcome coverage() {
    const auto scm = monotone_small_scm();
    const double truth = oracle_effects(scm).ide;
    int covered = 0;
    double se_sum = 0, sq_err = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        const auto data = generate_dataset(scm, 20000, derive_seed(5000, rep));
        const auto e = cross_fit_estimate(data, scm_dag(data), config_with_seed(derive_seed(5100, rep)));
        record(e);
        covered += e.ide.lo <= truth && truth <= e.ide.hi;
        se_sum += e.ide.se;
        sq_err += (e.ide.estimate - truth) * (e.ide.estimate - truth);
    }
    const double rate = covered / 200.0;
    info("mean reported se " + fmt("%.5f", se_sum / 200) + ", empirical rmse " + fmt("%.5f", std::sqrt(sq_err / 200)));
    return {rate >= 0.92 && rate <= 0.98, false,
            std::to_string(covered) + "/200 = " + fmt("%.3f", rate) + " of 95% intervals cover the oracle IDE (band [0.92, 0.98])"};
}

Outcome additivity() {
    const auto scm = monotone_small_scm();
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto c = config_with_seed(seed);
        c.k = 2 + static_cast<int>(seed % 4);
        c.draws = 1 + 7 * seed;
        if (seed % 3 == 1) c.nuisance.outcome.kind = LearnerKind::boosted_trees;
        if (seed % 3 == 2) c.nuisance.propensity.kind = LearnerKind::intercept_only;
        const auto data = generate_dataset(scm, 3000, 6000 + seed);
        record(cross_fit_estimate(data, scm_dag(data), c));
    }
    return {worst_additivity <= 1e-12, false,
            "max |IDE + IIE - total_contrast| = " + fmt("%.2e", worst_additivity) + " over " +
                std::to_string(estimation_runs) + " estimation runs (tol 1e-12)"};
}

double bisection_evalue(double rr) {
    double lo = 1, hi = 2 * rr + 1;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid * mid / (2 * mid - 1) < rr ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome evalue_identities() {
    double worst_bisect = 0, worst_curve = 0;
    for (int i = 0; i <= 900; ++i) {
        const double rr = 1 + 0.01 * i;
        worst_bisect = std::max(worst_bisect, std::abs(e_value(rr) - bisection_evalue(rr)));
        if (rr > 1)
            for (const auto& [x, y] : sensitivity_curve(rr, default_curve_grid(rr, 40)))
                worst_curve = std::max(worst_curve, std::abs(x * y / (x + y - 1) - rr));
    }
    const bool unit = e_value(1.0) == 1.0;
    return {unit && worst_bisect <= 1e-9 && worst_curve <= 1e-9, false,
            std::string("e_value(1) ") + (unit ? "= 1" : "!= 1") + "; bisection gap " + fmt("%.1e", worst_bisect) +
                "; curve identity gap " + fmt("%.1e", worst_curve) + " (tol 1e-9)"};
}

Outcome hmda_reproduction() {
    const char* path = std::getenv("HMDA_LAR_CSV");
    if (!path || !*path) return {true, true, "HMDA_LAR_CSV not set; network-optional criterion skipped"};
    std::ifstream in(path);
    if (!in) return {false, false, std::string("cannot open ") + path};
    const auto parsed = parse_lar(in);
    CohortConfig cohort;
    cohort.year = "2022";
    const auto built = build_cohort(parsed.records, cohort);
    const auto& r = built.report;
    const bool sizes = built.dataset.n() == 89465 && r.n_reference == 82721 && r.n_comparison == 6744;
    info("cohort " + std::to_string(built.dataset.n()) + " = " + std::to_string(r.n_reference) + " + " +
         std::to_string(r.n_comparison));
    const double d0 = r.groups[0].denial_rate, d1 = r.groups[1].denial_rate;
    const bool rates = std::abs(d0 - 0.095) <= 0.003 && std::abs(d1 - 0.170) <= 0.003;
    info("denial rates " + fmt("%.4f", d0) + " / " + fmt("%.4f", d1));

    auto c = config_with_seed(20240101);
    const auto e = cross_fit_estimate(built.dataset, default_credit_dag(), c);
    record(e);
    const bool ide = e.ide.lo <= 0.036 && e.ide.hi >= 0.001;
    const bool iie = e.iie.lo <= 0.080 && e.iie.hi >= 0.041;
    const bool ev = e.sensitivity && std::abs(e.sensitivity->evalue_point - 1.68) <= 0.05;
    info("IDE " + fmt("%.4f", e.ide.estimate) + " [" + fmt("%.4f", e.ide.lo) + ", " + fmt("%.4f", e.ide.hi) +
         "], IIE " + fmt("%.4f", e.iie.estimate) + " [" + fmt("%.4f", e.iie.lo) + ", " + fmt("%.4f", e.iie.hi) +
         "], E-value " + (e.sensitivity ? fmt("%.3f", e.sensitivity->evalue_point) : std::string("n/a")));
    return {sizes && rates && ide && iie && ev, false,
            std::string("sizes ") + (sizes ? "ok" : "differ") + ", denial rates " + (rates ? "ok" : "differ") +
                ", IDE CI " + (ide ? "overlaps" : "misses") + ", IIE CI " + (iie ? "overlaps" : "misses") +
                ", E-value " + (ev ? "ok" : "differs")};
}

Outcome runtime_budget() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("medaudit_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string prefix = (dir / "sim").string();
    Json sim = {{"preset", "monotone-small"}, {"n", 30000}, {"seed", 9}, {"out", prefix}};
    cmd_simulate(sim);
    const auto start = std::chrono::steady_clock::now();
    const Json summary = cmd_estimate({{"data", prefix + ".csv"}, {"out", (dir / "run").string()},
                                       {"threads", static_cast<int>(threads())}});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    worst_additivity = std::max(worst_additivity, std::abs(summary["ide"].get<double>() + summary["iie"].get<double>() -
                                                           summary["total_contrast"].get<double>()));
    ++estimation_runs;
    fs::remove_all(dir);
    return {seconds < 60, false,
            "cmd_estimate on 30,000 rows (logistic, K=5, D=25) took " + fmt("%.2f", seconds) + " s on " +
                std::to_string(threads()) + " thread(s) (budget 60 s)"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "oracle equivalence", 10, oracle_equivalence},
        {2, "monotone bounds", 30, monotone_bounds},
        {3, "estimator consistency", 300, consistency},
        {4, "double robustness", 600, double_robustness},
        {5, "CI coverage", 900, coverage},
        {9, "runtime budget", 1e9, runtime_budget},
        {6, "additivity", 1e9, additivity},
        {7, "E-value identities", 1e9, evalue_identities},
        {8, "HMDA reference numbers", 1e9, hmda_reproduction},
    };
    std::vector<std::pair<int, bool>> verdicts;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, false, std::string("threw: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = seconds < c.budget_seconds;
        const bool pass = o.pass && in_budget;
        std::string timing = fmt("%.1f s", seconds);
        if (c.budget_seconds < 1e8) timing += fmt(" of %.0f s", c.budget_seconds);
        std::printf("[%s] %d %s: %s (%s)\n", o.skipped ? "SKIP" : pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), timing.c_str());
        std::fflush(stdout);
        verdicts.emplace_back(c.id, pass);
    }
    std::sort(verdicts.begin(), verdicts.end());
    int failed = 0;
    std::string list;
    for (const auto& [id, pass] : verdicts)
        if (!pass) {
            ++failed;
            list += " " + std::to_string(id);
        }
    std::printf("%zu criteria, %d failed%s\n", verdicts.size(), failed, failed ? (":" + list).c_str() : "");
    return failed ? 1 : 0;
}
