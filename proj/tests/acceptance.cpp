// Acceptance checks; prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
#include "morphlearn/cpg.hpp"
#include "morphlearn/error.hpp"
#include "morphlearn/experiment.hpp"
#include "morphlearn/external_env.hpp"
#include "morphlearn/metrics.hpp"
#include "morphlearn/nn.hpp"
#include "morphlearn/ppo.hpp"
#include "morphlearn/revde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

using namespace morphlearn;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kStub = STUB_ENV_PATH;
const std::string kCli = MORPHLEARN_CLI_PATH;

int failures = 0;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs one criterion; an exception counts as a failure with its message.
void criterion(int id, const std::string& name, const std::function<bool(std::ostringstream&)>& body)
{
    std::ostringstream detail;
    bool ok = false;
    const auto t0 = Clock::now();
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail << "exception: " << e.what();
    }
    char time[32];
    std::snprintf(time, sizeof time, "%.2fs", seconds_since(t0));
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " [" << time << "] "
              << detail.str() << std::endl;
    if (!ok)
        ++failures;
}

double median_of(std::vector<double> v) { return quantile(std::move(v), 0.5); }

class GaussianPolicy final : public Policy {
public:
    GaussianPolicy(ActorCriticParams p, std::uint64_t seed) : params_(std::move(p)), rng_(seed) {}
    void act(const Observation& obs, std::span<double> targets) override
    {
        const auto out = actor_critic_forward(params_, obs.values);
        for (std::size_t i = 0; i < targets.size(); ++i)
            targets[i] = std::clamp(out.mean[i] + out.std[i] * rng_.normal(), -1.0, 1.0);
    }

private:
    ActorCriticParams params_;
    RngStream rng_;
};

std::vector<double> uniform_vector(RngStream& rng, std::size_t n)
{
    std::vector<double> v(n);
    for (auto& x : v)
        x = rng.uniform(-1.0, 1.0);
    return v;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

bool c1(std::ostringstream& d)
{
    const MorphologyTree spider = load_bundled_robot("spider");
    const std::size_t hinges = spider.hinge_count();
    const std::size_t pairs = neighbour_pairs(spider).pairs.size();
    const std::size_t cpg = cpg_param_count(spider);
    // Independent evaluation of the closed-form counts for N = 8.
    const std::size_t n = 8;
    const std::size_t ann_oracle = 32 * (3 * n + 4 + 1) + 32 * (64 + 1) + n * (32 + 1);
    const std::size_t drl_oracle = (n * (32 + 1) + 2 * n * (n + 1)) + (32 + 1) + (32 * (3 * n + 4 + 1) + 32 * (64 + 1));
    const std::size_t ann = ann_param_count(spider);
    const std::size_t drl = drl_param_count(spider);
    d << "hinges=" << hinges << " pairs=" << pairs << " cpg=" << cpg << " ann=" << ann << " (oracle " << ann_oracle
      << ") drl=" << drl << " (oracle " << drl_oracle << ")";
    return hinges == 8 && pairs == 10 && cpg == 18 && ann == 3272 && ann == ann_oracle && drl == 3449
           && drl == drl_oracle;
}

bool c2(std::ostringstream& d)
{
    RngStream rng(2);
    const RevdeConfig rc = RevdeConfig::cpg_defaults();
    std::size_t calls = 0;
    const auto r = run_revde([&](std::span<const double> g) { ++calls; return g[0]; }, 18, rc, rng);
    bool dense = true;
    for (std::size_t i = 0; i < r.history.size(); ++i)
        dense = dense && r.history[i].evaluation == i + 1;

    MorphologyTree pair("pair");
    pair.attach(pair.attach(0, 0, ModuleKind::ActiveHinge), 0, ModuleKind::ActiveHinge);
    EnvConfig short_env;
    short_env.horizon = 0.25; // record count does not depend on episode length
    PpoConfig pc;
    const auto p = run_ppo(surrogate_factory(short_env), pair, pc, rng);
    bool pdense = !p.aborted;
    for (std::size_t i = 0; i < p.history.size(); ++i)
        pdense = pdense && p.history[i].evaluation == i + 1;
    d << "revde(mu=" << rc.population << ",N=" << rc.new_candidates << ",iters=" << rc.iterations
      << ") records=" << r.history.size() << " objective calls=" << calls << "; ppo(" << pc.agents << "x"
      << pc.episodes << ") records=" << p.history.size();
    return r.history.size() == 1000 && calls == 1000 && dense && p.history.size() == 1000 && pdense;
}

bool c3(std::ostringstream& d)
{
    const auto t0 = Clock::now();
    MorphologyTree one("one");
    one.attach(0, 0, ModuleKind::ActiveHinge);
    const CpgNetwork net = build_cpg(one, Genome{{1.0}, "cpg"});
    CpgState s = CpgState::initial(1);
    const int n = 785;
    const double dt = (std::numbers::pi / 4) / n;
    for (int i = 0; i < n; ++i)
        s = cpg_step(net, s, dt);
    // Closed form from (sqrt2/2, sqrt2/2): x = sin(t + pi/4), y = cos(t + pi/4).
    const double ex = std::abs(s.x[0] - std::sin(std::numbers::pi / 2));
    const double ey = std::abs(s.y[0] - std::cos(std::numbers::pi / 2));

    CpgState e = CpgState::initial(1);
    double drift = 0.0;
    bool bounded = true;
    for (int i = 0; i < 30000; ++i) {
        e = cpg_step(net, e, kCpgInternalDt);
        drift = std::max(drift, std::abs(e.x[0] * e.x[0] + e.y[0] * e.y[0] - 1.0));
        const double out = cpg_output(e)[0];
        bounded = bounded && out > -1.0 && out < 1.0;
    }
    // Outputs of a strongly coupled spider network also stay strictly inside.
    const MorphologyTree spider = load_bundled_robot("spider");
    CpgPolicy policy(build_cpg(spider, Genome{std::vector<double>(18, 1.0), "cpg"}), 0.05);
    Observation obs{std::vector<double>(observation_size(8), 0.0)};
    std::vector<double> out(8);
    for (int i = 0; i < 600; ++i) {
        policy.act(obs, out);
        for (double v : out)
            bounded = bounded && v > -1.0 && v < 1.0;
    }
    const double elapsed = seconds_since(t0);
    d << "|x-1|=" << ex << " |y|=" << ey << " max|x^2+y^2-1| over 30 s=" << drift << " bounded=" << bounded
      << " runtime=" << elapsed << "s";
    return ex <= 1e-6 && ey <= 1e-6 && drift <= 1e-6 && bounded && elapsed < 1.0;
}

bool c4(std::ostringstream& d)
{
    const std::vector<double> wi{0, 0}, wj{1, 0}, wk{0, 1};
    const auto v = revde_mutate(wi, wj, wk, 0.5);
    const bool hand = v[0] == std::vector<double>{0.5, -0.5} && v[1] == std::vector<double>{0.75, 0.75}
                      && v[2] == std::vector<double>{-0.125, 0.375};

    RngStream rng(4);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto a = uniform_vector(rng, 20), b = uniform_vector(rng, 20), c = uniform_vector(rng, 20);
        const auto m = revde_mutate(a, b, c, 0.5);
        const auto back = revde_unmutate(m[0], m[1], m[2], 0.5);
        for (std::size_t g = 0; g < 20; ++g)
            worst = std::max({worst, std::abs(back[0][g] - a[g]), std::abs(back[1][g] - b[g]),
                              std::abs(back[2][g] - c[g])});
    }

    const std::size_t len = 10000;
    const std::vector<double> parent(len, 0.0), mutant(len, 0.5);
    double worst_frac = 0.0;
    for (int m = 0; m < 100; ++m) {
        const auto child = uniform_crossover(parent, mutant, 0.9, rng, SearchBox{});
        const double frac =
            static_cast<double>(std::count(child.begin(), child.end(), 0.5)) / static_cast<double>(len);
        worst_frac = std::max(worst_frac, std::abs(frac - 0.9));
    }
    d << "hand-case exact=" << hand << " max inversion error=" << worst
      << " max |mutant fraction - CR| over 100 masks=" << worst_frac;
    return hand && worst <= 1e-12 && worst_frac <= 0.01;
}

bool c5(std::ostringstream& d)
{
    const auto t0 = Clock::now();
    const double a = clipped_surrogate(1.5, 1.0, 0.2);
    const double b = clipped_surrogate(0.5, -1.0, 0.2);

    // GAE(lambda = 1) against a brute-force discounted sum.
    RngStream rng(5);
    const std::size_t n = 50;
    std::vector<double> r = uniform_vector(rng, n), v = uniform_vector(rng, n);
    std::vector<std::uint8_t> done(n, 0);
    done[20] = 1;
    const double gamma = 0.2, boot = 0.4;
    const auto g = compute_gae(r, v, done, boot, gamma, 1.0);
    double gae_err = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double ret = 0.0, disc = 1.0;
        bool ended = false;
        for (std::size_t k = t; k < n && !ended; ++k) {
            ret += disc * r[k];
            disc *= gamma;
            ended = done[k] != 0;
        }
        if (!ended)
            ret += disc * boot;
        gae_err = std::max(gae_err, std::abs(g.advantages[t] - (ret - v[t])));
    }

    // Full loss gradient on a 3-step, 2-hinge rollout.
    const std::size_t hinges = 2, rows = 3;
    PpoConfig pc;
    ActorCriticParams params = init_actor_critic(hinges, rng);
    params.log_std[0] = -0.4;
    params.log_std[1] = 0.3;
    TrainingBatch batch;
    batch.observations = Tensor::matrix(rows, observation_size(hinges), uniform_vector(rng, rows * observation_size(hinges)));
    batch.actions = Tensor::matrix(rows, hinges, uniform_vector(rng, rows * hinges));
    for (std::size_t t = 0; t < rows; ++t) {
        const auto out = actor_critic_forward(params, batch.observations.values().subspan(t * observation_size(hinges),
                                                                                          observation_size(hinges)));
        // Old policy slightly off the current one so some ratios clip.
        batch.old_log_probs.push_back(
            log_prob_and_entropy(out.mean, out.std, batch.actions.values().subspan(t * hinges, hinges)).log_prob
            + (t == 0 ? 0.5 : -0.05));
        batch.advantages.push_back(t == 1 ? -1.0 : 0.7);
        batch.returns.push_back(rng.uniform(-1, 1));
    }
    const auto lg = ppo_loss_and_gradient(params, batch, pc);
    std::vector<double> flat = flatten(params);
    const auto loss_at = [&](const std::vector<double>& f) {
        return ppo_loss_and_gradient(unflatten_actor_critic(hinges, f), batch, pc).loss;
    };
    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double saved = flat[i];
        flat[i] = saved + h;
        const double up = loss_at(flat);
        flat[i] = saved - h;
        const double down = loss_at(flat);
        flat[i] = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - lg.gradient[i]) / std::max(1.0, std::abs(fd)));
    }
    const double elapsed = seconds_since(t0);
    d << "clip(1.5,+1)=" << a << " clip(0.5,-1)=" << b << " GAE max err=" << gae_err << " gradient max rel err="
      << worst << " over " << flat.size() << " params, runtime=" << elapsed << "s";
    return a == 1.2 && b == -0.8 && gae_err <= 1e-10 && worst <= 1e-4 && elapsed < 10.0;
}

bool c6(std::ostringstream& d)
{
    const auto t0 = Clock::now();
    const MorphologyTree spider = load_bundled_robot("spider");
    const EnvConfig env;

    // Random baselines: 1000 uniform genomes in the search box for the
    // evolved controllers, 1000 freshly initialised stochastic policies for
    // the actor-critic.
    std::map<std::string, double> baseline;
    {
        RngStream rng(600);
        std::vector<double> cpg, ann, drl;
        SurrogateEnvironment sim(spider, env);
        for (int i = 0; i < 1000; ++i) {
            CpgPolicy p(build_cpg(spider, Genome{uniform_vector(rng, 18), "cpg"}), env.control_dt);
            cpg.push_back(evaluate_fitness(sim, p));
            AnnPolicy q(genome_decode(spider, Genome{uniform_vector(rng, ann_structural_param_count(8)), "ann"}));
            ann.push_back(evaluate_fitness(sim, q));
            RngStream init = rng.split(static_cast<std::uint64_t>(i));
            GaussianPolicy s(init_actor_critic(8, init), rng.next_u64());
            drl.push_back(evaluate_fitness(sim, s));
        }
        baseline[kCpgRevde] = median_of(cpg);
        baseline[kAnnRevde] = median_of(ann);
        baseline[kDrlPpo] = median_of(drl);
    }

    ExperimentConfig cfg;
    cfg.robots = {"spider"};
    cfg.repetitions = 5;
    cfg.budget = 1000;
    cfg.seed = 6;
    cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
    const ExperimentResult res = run_experiment(cfg);
    bool ok = res.failures.empty();
    for (const auto& fw : all_frameworks()) {
        const CurveSet cells = cell_curves(res.records, fw, "spider");
        std::vector<double> best;
        for (const auto& [rep, curve] : cells)
            best.push_back(*std::max_element(curve.begin(), curve.end()));
        const double med = best.empty() ? 0.0 : median_of(best);
        const double ratio = baseline[fw] > 0.0 ? med / baseline[fw] : INFINITY;
        d << fw << ": median best=" << med << " random median=" << baseline[fw] << " ratio=" << ratio << "; ";
        ok = ok && cells.size() == 5 && ratio >= 2.0;
    }
    const double elapsed = seconds_since(t0);
    d << "runtime=" << elapsed << "s";
    return ok && elapsed < 600.0;
}

// Brute-force metric oracles over a synthetic table: 3 frameworks, 4 robots,
// 4 repetitions, 60 evaluations, fitness on a 1/8 grid so every sum is exact.
bool c7(std::ostringstream& d)
{
    RngStream rng(7);
    const std::vector<std::string> fws{"a", "b", "c"}, robots{"r1", "r2", "r3", "r4"};
    const std::map<std::string, std::size_t> counts{{"r1", 10}, {"r2", 40}, {"r3", 25}, {"r4", 70}};
    const std::size_t reps = 4, evals = 60;
    std::vector<EvaluationRecord> records;
    for (const auto& fw : fws)
        for (const auto& robot : robots)
            for (std::size_t rep = 1; rep <= reps; ++rep)
                for (std::size_t e = 1; e <= evals; ++e)
                    records.push_back({fw, robot, rep, e, static_cast<double>(rng.below(80)) / 8.0, false});
    // Shuffle so nothing relies on input order.
    for (std::size_t i = records.size(); i > 1; --i)
        std::swap(records[i - 1], records[rng.below(i)]);

    bool ok = true;
    int checked = 0;
    for (const auto& fw : fws) {
        std::map<std::string, double> eff_by_robot;
        for (const auto& robot : robots) {
            // Efficacy: max per repetition by scanning every record.
            double sum_max = 0.0;
            for (std::size_t rep = 1; rep <= reps; ++rep) {
                double m = -1.0;
                for (const auto& r : records)
                    if (r.framework == fw && r.robot == robot && r.repetition == rep)
                        m = std::max(m, r.fitness);
                sum_max += m;
            }
            const double eff = sum_max / static_cast<double>(reps);
            eff_by_robot[robot] = eff;
            ok = ok && efficacy(records, fw, robot) == eff;
            ++checked;

            // Efficiency: linear scan for the first index reaching the threshold.
            for (double threshold : {2.5, 7.0, 9.875, 20.0}) {
                double sum_hit = 0.0;
                for (std::size_t rep = 1; rep <= reps; ++rep) {
                    std::size_t hit = evals + 1;
                    for (std::size_t e = 1; e <= evals && hit > evals; ++e) {
                        double best = -1.0;
                        for (const auto& r : records)
                            if (r.framework == fw && r.robot == robot && r.repetition == rep && r.evaluation <= e)
                                best = std::max(best, r.fitness);
                        if (best >= threshold)
                            hit = e;
                    }
                    sum_hit += static_cast<double>(hit);
                }
                ok = ok && efficiency(records, fw, threshold, robot) == sum_hit / static_cast<double>(reps);
                ++checked;
            }
        }
        // Robustness: population variance across robots.
        double mean_eff = 0.0;
        for (const auto& [robot, e] : eff_by_robot)
            mean_eff += e;
        mean_eff /= static_cast<double>(robots.size());
        double var = 0.0;
        for (const auto& [robot, e] : eff_by_robot)
            var += (e - mean_eff) * (e - mean_eff);
        var /= static_cast<double>(robots.size());
        ok = ok && robustness(records, fw).variance == var;
        ++checked;

        // Regression via the normal equations.
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (const auto& [robot, e] : eff_by_robot) {
            const double x = static_cast<double>(counts.at(robot));
            sx += x;
            sy += e;
            sxx += x * x;
            sxy += x * e;
            syy += e * e;
        }
        const double n = static_cast<double>(robots.size());
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double rr = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
        const Regression fit = param_fitness_regression(records, fw, counts);
        ok = ok && fit.slope == slope && fit.r == rr;
        ++checked;
    }

    // Dotted-line reading: the reference ends at 6; the other framework's
    // mean running best first reaches 6 at evaluation 370.
    std::vector<EvaluationRecord> curves;
    for (std::size_t rep = 1; rep <= 4; ++rep) {
        for (std::size_t e = 1; e <= 1000; ++e) {
            curves.push_back({"cpg+revde", "spider", rep, e, 6.0 * static_cast<double>(e) / 1000.0, false});
            const double ramp = static_cast<double>(e) / 370.0 * 6.0 + (rep % 2 == 0 ? 0.5 : -0.5);
            curves.push_back({"ann+revde", "spider", rep, e, ramp, false});
        }
    }
    const LevelCrossing lc = evaluations_to_level(curves, "cpg+revde", "ann+revde", "spider");
    std::size_t oracle = 1001;
    for (std::size_t e = 1; e <= 1000 && oracle > 1000; ++e) {
        double s = 0.0;
        for (std::size_t rep = 1; rep <= 4; ++rep)
            s += static_cast<double>(e) / 370.0 * 6.0 + (rep % 2 == 0 ? 0.5 : -0.5);
        if (s / 4.0 >= 6.0)
            oracle = e;
    }
    ok = ok && lc.level == 6.0 && lc.evaluations == oracle && oracle == 370;
    d << checked << " metric values equal their oracles exactly=" << ok << "; level " << lc.level << " reached at "
      << lc.evaluations << " (oracle " << oracle << ")";
    return ok;
}

bool c8(std::ostringstream& d)
{
    const fs::path base = fs::temp_directory_path() / "morphlearn_acceptance_determinism";
    fs::remove_all(base);
    const std::string common = kCli + " run --robots spider gecko babyA --reps 3 --budget 1000 --seed 8";
    std::string first;
    bool ok = true;
    for (int jobs : {1, 8}) {
        const fs::path out = base / ("jobs" + std::to_string(jobs));
        const std::string cmd = common + " --jobs " + std::to_string(jobs) + " --out " + out.string() + " > /dev/null";
        if (std::system(cmd.c_str()) != 0) {
            d << "run with --jobs " << jobs << " failed; ";
            return false;
        }
        const std::string csv = slurp(out / "records.csv");
        if (first.empty())
            first = csv;
        else
            ok = ok && csv == first;
    }
    const auto lines = std::count(first.begin(), first.end(), '\n');
    d << "records.csv with --jobs 1 and --jobs 8 byte-identical=" << ok << " (" << lines - 1 << " rows, "
      << first.size() << " bytes)";
    fs::remove_all(base);
    return ok && lines - 1 == 3 * 3 * 3 * 1000;
}

bool c9(std::ostringstream& d)
{
    // Scripted stub.
    MorphologyTree pair("pair");
    pair.attach(pair.attach(0, 0, ModuleKind::ActiveHinge), 0, ModuleKind::ActiveHinge);
    bool scripted = false;
    {
        ExternalEnvironment stub(kStub + " fixed 2 2", pair, EnvConfig{});
        const std::vector<double> t{0.1, -0.1};
        const bool reset_ok = stub.reset(1).values.size() == observation_size(2);
        const bool first = !stub.step(t).done;
        const StepResult last = stub.step(t);
        stub.close();
        scripted = reset_ok && first && last.done && last.displacement[0] == 0.5;
    }

    // Record surrogate transcripts, replay them through the adapter.
    RngStream rng(9);
    int replays = 0, exact = 0;
    const fs::path path = fs::temp_directory_path() / "morphlearn_acceptance_transcript.jsonl";
    for (const std::string robot : {"spider", "gecko", "snake"}) {
        const MorphologyTree tree = load_bundled_robot(robot);
        const std::size_t n = tree.hinge_count();
        for (int k = 0; k < 2; ++k) {
            auto make = [&](const std::vector<double>& g) -> std::unique_ptr<Policy> {
                if (k == 0)
                    return std::make_unique<CpgPolicy>(build_cpg(tree, Genome{g, "cpg"}), 0.05);
                return std::make_unique<AnnPolicy>(genome_decode(tree, Genome{g, "ann"}));
            };
            const auto genome = uniform_vector(rng, k == 0 ? cpg_param_count(tree) : ann_structural_param_count(n));
            double in_process = 0.0;
            {
                SurrogateEnvironment inner(tree, EnvConfig{});
                std::ofstream sink(path);
                TranscriptRecorder rec(inner, sink);
                auto policy = make(genome);
                in_process = evaluate_fitness(rec, *policy);
            }
            ExternalEnvironment replay(kStub + " replay " + path.string(), tree, EnvConfig{});
            auto policy = make(genome);
            const double replayed = evaluate_fitness(replay, *policy);
            replay.close();
            ++replays;
            exact += replayed == in_process;
        }
    }
    fs::remove(path);
    d << "scripted handshake/reset/step/close=" << scripted << "; " << exact << "/" << replays
      << " replayed transcripts reproduce in-process fitness bit-exactly";
    return scripted && exact == replays;
}

} // namespace

int main()
{
    criterion(1, "golden counts", c1);
    criterion(2, "budget identities", c2);
    criterion(3, "CPG dynamics", c3);
    criterion(4, "RevDE algebra", c4);
    criterion(5, "PPO math", c5);
    criterion(6, "learning sanity on the surrogate", c6);
    criterion(7, "metrics correctness", c7);
    criterion(8, "determinism across job counts", c8);
    criterion(9, "external protocol", c9);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
