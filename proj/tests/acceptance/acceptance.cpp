// Runs acceptance criteria 1-8 and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "app/attack.hpp"
#include "app/config.hpp"
#include "evoae/dct.hpp"
#include "evoae/encoding.hpp"
#include "evoae/image.hpp"
#include "evoae/moead.hpp"
#include "evoae/scenarios.hpp"

using namespace evoae;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path scratch(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("evoae-acceptance-" + std::to_string(::getpid()) + "-" + tag);
    fs::remove_all(p);
    return p;
}

app::AttackConfig shipped_config(const std::string& name, const std::string& tag) {
    auto cfg = app::AttackConfig::load(fs::path(EVOAE_DATA_DIR) / "configs" / name);
    cfg.io.output_dir = scratch(tag);
    return cfg;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// ---- oracles -------------------------------------------------------------

double alpha(int k, int n) { return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n); }

std::vector<double> naive_forward(const std::vector<double>& b, int n) {
    std::vector<double> out(b.size());
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            double s = 0.0;
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    s += b[y * n + x] * std::cos(std::numbers::pi * (2 * y + 1) * u / (2.0 * n)) *
                         std::cos(std::numbers::pi * (2 * x + 1) * v / (2.0 * n));
            out[u * n + v] = alpha(u, n) * alpha(v, n) * s;
        }
    return out;
}

std::vector<double> naive_inverse(const std::vector<double>& c, int n) {
    std::vector<double> out(c.size());
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double s = 0.0;
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v)
                    s += alpha(u, n) * alpha(v, n) * c[u * n + v] *
                         std::cos(std::numbers::pi * (2 * y + 1) * u / (2.0 * n)) *
                         std::cos(std::numbers::pi * (2 * x + 1) * v / (2.0 * n));
            out[y * n + x] = s;
        }
    return out;
}

double tcheby_oracle(const std::vector<double>& f, const std::vector<double>& l, const std::vector<double>& z) {
    double g = -1.0;
    for (std::size_t i = 0; i < f.size(); ++i) g = std::max(g, l[i] * std::fabs(f[i] - z[i]));
    return g;
}

bool replace_oracle(double vy, double vx, double gy, double gx) {
    if (vy == 0.0 && vx == 0.0) return gy <= gx;
    if (vy == 0.0) return true;
    if (vx == 0.0) return false;
    return vy < vx;
}

class MeanProblem final : public Problem {
public:
    std::size_t objective_count() const override { return 2; }
    const Bounds& bounds() const override { return bounds_; }
    Evaluation evaluate(std::span<const double> x) const override {
        const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        return {{m, 1.0 - m}, 0.0};
    }

private:
    Bounds bounds_ = Bounds::uniform(10, 0.0, 1.0);
};

// ---- criteria -------------------------------------------------------------

Check dimensions() {
    Check c;
    const std::size_t want[] = {848, 1104, 1424};
    const int patterns[] = {1, 5, 10};
    for (int k = 0; k < 3; ++k) {
        const auto got = dct_dims(224, 224, patterns[k], 8);
        c.require(got == want[k], "dct_dims N_AP=" + std::to_string(patterns[k]) + " gave " + std::to_string(got));
    }
    const auto d32 = DirectLayout(32, 32, 3, 1).genotype_length();
    const auto d224 = DirectLayout(224, 224, 3, 3, -255, 255, true).genotype_length();
    c.require(d32 == 3072, "direct 32x32x3 gave " + std::to_string(d32));
    c.require(d224 == 5625, "direct 224x224 luma N_w=3 gave " + std::to_string(d224));
    c.note("848/1104/1424, 3072, 5625");
    return c;
}

Check operators() {
    Check c;
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 2000;
    int bad = 0;

    for (int t = 0; t < n; ++t) {
        const std::size_t m = 2 + t % 3;
        std::vector<double> f(m), z(m), l(m);
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            f[i] = 10 * u(gen) - 5;
            z[i] = 10 * u(gen) - 5;
            l[i] = u(gen);
            s += l[i];
        }
        for (double& x : l) x /= s;
        bad += std::fabs(tchebycheff(f, {l}, z) - tcheby_oracle(f, l, z)) > 1e-9;
    }
    c.require(bad == 0, std::to_string(bad) + " Tchebycheff mismatches");

    bad = 0;
    Rng rng(7);
    std::size_t crossed = 0, coords = 0;
    for (int t = 0; t < n; ++t) {
        const std::size_t len = 1 + t % 8;
        const auto b = Bounds::uniform(len, -1.0, 1.0);
        std::vector<double> x1(len), x2(len), x3(len);
        for (std::size_t k = 0; k < len; ++k) {
            x1[k] = 2 * u(gen) - 1;
            x2[k] = 2 * u(gen) - 1;
            x3[k] = 2 * u(gen) - 1;
        }
        const auto y = de_crossover(x1, x2, x3, 0.9, 0.5, b, rng);
        for (std::size_t k = 0; k < len; ++k) {
            const double donor = std::clamp(x1[k] + 0.5 * (x2[k] - x3[k]), -1.0, 1.0);
            if (y[k] != x1[k] && std::fabs(y[k] - donor) > 1e-9) ++bad;
            crossed += y[k] != x1[k];
            ++coords;
        }
        bad += de_crossover(x1, x2, x3, 0.0, 0.5, b, rng) != x1;
    }
    const double cr_rate = static_cast<double>(crossed) / static_cast<double>(coords);
    c.require(bad == 0, std::to_string(bad) + " DE mismatches");
    c.require(std::fabs(cr_rate - 0.9) < 0.03, "DE crossover rate " + fmt("%.4f", cr_rate));

    bad = 0;
    for (int t = 0; t < n; ++t) {
        const double x = u(gen), eta = 1 + 40 * u(gen);
        const double want = x < 0.5 ? std::pow(2 * x, 1 / (eta + 1)) - 1 : 1 - std::pow(2 * (1 - x), 1 / (eta + 1));
        bad += std::fabs(polynomial_delta(x, eta) - want) > 1e-9;
    }
    double mean = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) mean += polynomial_delta(uniform01(rng), 20.0);
    mean /= draws;
    std::size_t mutated = 0;
    const auto wide = Bounds::uniform(1000, -1.0, 1.0);
    const std::vector<double> y0(1000, 0.0);
    for (int t = 0; t < 100; ++t) {
        const auto y = polynomial_mutation(y0, 0.01, 20.0, wide, rng);
        for (std::size_t k = 0; k < y.size(); ++k) mutated += y[k] != y0[k];
    }
    const double pm_rate = mutated / 100000.0;
    c.require(bad == 0, std::to_string(bad) + " polynomial mutation mismatches");
    c.require(std::fabs(mean) < 0.002, "polynomial step mean " + fmt("%.5f", mean));
    c.require(std::fabs(pm_rate - 0.01) < 0.002, "mutation rate " + fmt("%.5f", pm_rate));

    bad = 0;
    for (int t = 0; t < n / 20; ++t) {
        auto z = ReferencePoint::unset(3);
        std::vector<double> best(3, std::numeric_limits<double>::infinity());
        for (int k = 0; k < 20; ++k) {
            std::vector<double> f = {u(gen), u(gen), u(gen)};
            z = update_reference(z, f);
            for (int i = 0; i < 3; ++i) best[i] = std::min(best[i], f[i]);
            bad += z.z != best;
        }
    }
    c.require(bad == 0, std::to_string(bad) + " reference-point mismatches");

    bad = 0;
    for (int t = 0; t < n; ++t) {
        const double a = u(gen);
        const WeightVector w{{a, 1 - a}};
        const ReferencePoint z{{u(gen) - 1, u(gen) - 1}};
        Individual y{{}, {u(gen), u(gen)}, u(gen) < 0.5 ? 0.0 : u(gen), true};
        Individual x{{}, {u(gen), u(gen)}, u(gen) < 0.5 ? 0.0 : u(gen), true};
        if (t % 10 == 0) x = y;
        const bool want = replace_oracle(y.violation, x.violation, tcheby_oracle(y.objectives, w.lambda, z.z),
                                         tcheby_oracle(x.objectives, w.lambda, z.z));
        bad += replaces(y, x, w, z) != want;
    }
    c.require(bad == 0, std::to_string(bad) + " replacement mismatches");
    c.note(std::to_string(n) + " instances per operator, DE rate " + fmt("%.3f", cr_rate) + ", PM mean " +
           fmt("%.5f", mean));
    return c;
}

Check engine_sanity() {
    Check c;
    MeanProblem problem;
    RunConfig cfg;
    cfg.population_size = 50;
    cfg.generations = 100;
    cfg.seed = 1;
    const auto result = Moead(problem, cfg).run();
    double lo = 1.0, hi = 0.0, worst = 0.0;
    for (const auto& m : result.archive) {
        worst = std::max(worst, std::fabs(m.objectives[0] + m.objectives[1] - 1.0));
        lo = std::min(lo, m.objectives[0]);
        hi = std::max(hi, m.objectives[0]);
    }
    c.require(!result.archive.empty(), "empty archive");
    c.require(worst <= 1e-9, "|f1+f2-1| up to " + fmt("%.3g", worst));
    c.require(hi - lo >= 0.8, "f1 span " + fmt("%.4f", hi - lo));
    c.note(std::to_string(result.archive.size()) + " members, f1 span " + fmt("%.4f", hi - lo) + ", max |f1+f2-1| " +
           fmt("%.2g", worst));
    return c;
}

struct AccuracyRun {
    app::AttackOutcome outcome;
    fs::path dir;
};

Check accuracy(AccuracyRun& run) {
    Check c;
    const auto cfg = shipped_config("accuracy.json", "accuracy");
    const auto clean = read_image(cfg.io.input);
    const auto clean_conf = app::make_oracle(cfg.oracle)->classify(clean).top();
    run.outcome = app::run_attack(cfg);
    run.dir = cfg.io.output_dir;
    const auto& o = run.outcome;
    c.require(clean_conf.label == "frog" && clean_conf.confidence >= 0.9,
              "clean top-1 " + clean_conf.label + " " + fmt("%.4f", clean_conf.confidence));
    c.require(cfg.optimizer.population_size == 100 && cfg.optimizer.generations == 200, "config is not N_D=100, N_g=200");
    double best_rmse = std::numeric_limits<double>::infinity(), best_conf = 1.0;
    for (const auto& m : o.result.archive)
        if (m.feasible() && m.objectives[0] < 0.2 && m.objectives[1] < best_rmse) {
            best_rmse = m.objectives[1];
            best_conf = m.objectives[0];
        }
    c.require(o.exit_code == app::kExitOk, "exit code " + std::to_string(o.exit_code) + " " + o.message);
    c.require(best_rmse < 25.0, "no member with confidence < 0.2 and RMSE < 25");
    const std::uint64_t queries = std::max<std::uint64_t>(o.result.evaluations, o.oracle_stats.queries);
    c.require(queries <= 200000, std::to_string(queries) + " queries");
    c.note("clean " + fmt("%.4f", clean_conf.confidence) + ", best RMSE " + fmt("%.2f", best_rmse) + " at confidence " +
           fmt("%.4f", best_conf) + ", " + std::to_string(o.result.evaluations) + " evaluations, " +
           std::to_string(o.oracle_stats.queries) + " backend queries, archive " +
           std::to_string(o.result.archive.size()));
    return c;
}

Check l0_l1() {
    Check c;
    const auto cfg = shipped_config("l0_l1.json", "l0l1");
    const auto o = app::run_attack(cfg);
    std::set<double> l0;
    std::vector<Individual> feasible;
    for (const auto& m : o.result.archive)
        if (m.feasible()) {
            feasible.push_back(m);
            l0.insert(m.objectives[0]);
        }
    bool mutual = true;
    for (const auto& a : feasible)
        for (const auto& b : feasible) mutual = mutual && !dominates(a.objectives, b.objectives);
    c.require(o.exit_code == app::kExitOk, "exit code " + std::to_string(o.exit_code) + " " + o.message);
    c.require(mutual, "archive members dominate each other");
    c.require(l0.size() >= 5, std::to_string(l0.size()) + " distinct l0 values");
    std::string values;
    for (double v : l0) values += (values.empty() ? "" : ",") + fmt("%.0f", v);
    c.note(std::to_string(feasible.size()) + " feasible members, distinct l0 {" + values + "}");
    fs::remove_all(cfg.io.output_dir);
    return c;
}

Check robust() {
    Check c;
    const auto cfg = shipped_config("robust.json", "robust");
    const auto o = app::run_attack(cfg);
    c.require(o.exit_code == app::kExitOk, "exit code " + std::to_string(o.exit_code) + " " + o.message);

    const auto clean = read_image(cfg.io.input);
    auto oracle = app::make_oracle(cfg.oracle);
    ScenarioProblem problem(cfg.scenario, app::make_encoding(cfg.encoding, clean), clean, oracle, cfg.init);
    const auto& angles = problem.spec().angles;
    const auto zero = std::find(angles.begin(), angles.end(), 0.0) - angles.begin();

    const Individual* chosen = nullptr;
    double chosen_mean = 1.0, chosen_zero = 1.0;
    for (const auto& m : o.result.archive) {
        const auto detail = problem.evaluate_detail(m.genotype);
        const double mean = detail.evaluation.objectives[0];
        const double unrotated = detail.confidences[static_cast<std::size_t>(zero)];
        if (mean < 0.5 && unrotated < 0.1 && (!chosen || m.objectives[2] < chosen->objectives[2])) {
            chosen = &m;
            chosen_mean = mean;
            chosen_zero = unrotated;
        }
    }
    c.require(chosen != nullptr, "no member with mean confidence < 0.5 and unrotated confidence < 0.1");
    if (chosen) {
        const auto ae = problem.perturbed(chosen->genotype);
        const auto rows = robustness_table(clean, ae, *oracle, problem.correct_labels(), default_rotation_angles());
        std::string per_angle, clean_angle;
        double worst = 0.0;
        for (const auto& r : rows) {
            worst = std::max(worst, r.perturbed_correct);
            per_angle += (per_angle.empty() ? "" : ",") + fmt("%.3f", r.perturbed_correct);
            clean_angle += (clean_angle.empty() ? "" : ",") + fmt("%.3f", r.clean_correct);
        }
        c.require(rows.size() == 9, std::to_string(rows.size()) + " angles evaluated");
        c.require(worst < 0.5, "per-angle correct confidence up to " + fmt("%.4f", worst));
        c.note("mean " + fmt("%.4f", chosen_mean) + ", unrotated " + fmt("%.4f", chosen_zero) + ", l2 " +
               fmt("%.2f", chosen->objectives[2]) + ", AE per angle [" + per_angle + "], clean per angle [" +
               clean_angle + "]");
    }
    fs::remove_all(cfg.io.output_dir);
    return c;
}

Check dct_codec() {
    Check c;
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(-255.0, 255.0);
    const BlockDct dct(8);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> block(64);
        for (double& v : block) v = u(gen);
        const auto coeffs = dct.forward(block);
        const auto want = naive_forward(block, 8);
        const auto back = dct.inverse(coeffs);
        const auto want_back = naive_inverse(want, 8);
        for (int k = 0; k < 64; ++k) {
            worst = std::max(worst, std::fabs(coeffs[k] - want[k]));
            worst = std::max(worst, std::fabs(back[k] - want_back[k]));
            worst = std::max(worst, std::fabs(back[k] - block[k]));
        }
    }
    c.require(worst <= 1e-9, "max deviation " + fmt("%.3g", worst));

    double rho_max = 0.0;
    std::uniform_real_distribution<double> px(0.0, 255.0);
    for (const auto& [w, h] : {std::pair{16, 16}, std::pair{224, 224}, std::pair{37, 21}}) {
        Image img(w, h, 3);
        for (double& v : img.data) v = std::nearbyint(px(gen));
        const DctLayout layout(w, h, 3, 1);
        std::vector<double> genes(layout.genotype_length(), 0.0);
        for (std::size_t s = 0; s < layout.selector_count(); ++s) genes[s] = 1.5;
        const auto rho = layout.decode(genes, img);
        for (double d : rho.delta) rho_max = std::max(rho_max, std::fabs(d));
    }
    c.require(rho_max <= 1.0, "zero-pattern max |rho| " + fmt("%.4f", rho_max));
    c.note("1000 blocks, max deviation " + fmt("%.2g", worst) + ", zero-pattern max |rho| " + fmt("%.2g", rho_max));
    return c;
}

Check determinism(const AccuracyRun& first) {
    Check c;
    auto cfg = shipped_config("accuracy.json", "accuracy-repeat");
    const auto o = app::run_attack(cfg);
    const auto a = slurp(first.dir / "front.csv");
    const auto b = slurp(cfg.io.output_dir / "front.csv");
    c.require(!a.empty(), "first front.csv missing");
    c.require(a == b, "front.csv differs between runs");
    c.require(o.result.evaluations == first.outcome.result.evaluations, "evaluation counts differ");
    c.note(std::to_string(a.size()) + " bytes identical");
    fs::remove_all(cfg.io.output_dir);
    return c;
}

int report(int id, const char* title, double limit_seconds, const std::function<Check()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
        c = fn();
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0 && secs >= limit_seconds) c.require(false, "took " + fmt("%.1f", secs) + " s");
    std::printf("criterion %d %-28s %s  (%.2f s)  %s\n", id, title, c.ok ? "PASS" : "FAIL", secs, c.detail.c_str());
    std::fflush(stdout);
    return c.ok ? 0 : 1;
}

} // namespace

int main() {
    int failed = 0;
    AccuracyRun acc;
    failed += report(1, "dimensionality", 1.0, dimensions);
    failed += report(2, "operator oracles", 30.0, operators);
    failed += report(3, "engine sanity", 60.0, engine_sanity);
    failed += report(4, "accuracy vs amount", 600.0, [&] { return accuracy(acc); });
    failed += report(5, "l0 vs l1 diversity", 900.0, l0_l1);
    failed += report(6, "robust under rotation", 1800.0, robust);
    failed += report(7, "dct codec", 10.0, dct_codec);
    failed += report(8, "determinism", 0.0, [&] { return determinism(acc); });
    fs::remove_all(acc.dir);
    std::printf("%d of 8 criteria failed\n", failed);
    return failed;
}
