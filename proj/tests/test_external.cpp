#include "morphlearn/cpg.hpp"
#include "morphlearn/error.hpp"
#include "morphlearn/external_env.hpp"
#include "morphlearn/nn.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace morphlearn;
using namespace std::chrono_literals;

namespace {

const std::string kStub = STUB_ENV_PATH;
const std::string kCli = MORPHLEARN_CLI_PATH;

MorphologyTree single_hinge()
{
    MorphologyTree t("one");
    t.attach(0, 0, ModuleKind::ActiveHinge);
    return t;
}

std::string error_of(const std::string& fault)
{
    try {
        ExternalEnvironment env(kStub + " malformed " + fault, single_hinge(), EnvConfig{}, 2000ms);
        env.reset(0);
        const std::vector<double> t{0.0};
        env.step(t);
        env.close();
    } catch (const ProtocolError& e) {
        return e.what();
    }
    return "";
}

std::vector<double> spider_genome()
{
    std::vector<double> g(18);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = std::cos(3.0 * static_cast<double>(i));
    return g;
}

} // namespace

TEST_CASE("number formatting round-trips")
{
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK_THROWS_AS(format_number(NAN), NumericError);
}

TEST_CASE("scripted child: handshake, reset, step, close")
{
    MorphologyTree t("pair");
    const int h = t.attach(0, 0, ModuleKind::ActiveHinge);
    t.attach(h, 0, ModuleKind::ActiveHinge);
    ExternalEnvironment env(kStub + " fixed 2 3", t, EnvConfig{});
    CHECK(env.hinge_count() == 2);
    const Observation o = env.reset(7);
    CHECK(o.values.size() == observation_size(2));
    const std::vector<double> targets{0.5, -0.5};
    CHECK_FALSE(env.step(targets).done);
    CHECK_FALSE(env.step(targets).done);
    const StepResult last = env.step(targets);
    CHECK(last.done);
    CHECK(last.displacement[0] == 0.5);
    CHECK_NOTHROW(env.close());
    CHECK_THROWS_AS(env.reset(0), ProtocolError);
}

TEST_CASE("malformed replies name the offending field")
{
    CHECK(error_of("n_hinges").find("n_hinges") != std::string::npos);
    CHECK(error_of("ok").find("'ok'") != std::string::npos);
    CHECK(error_of("obs").find("'obs'") != std::string::npos);
    CHECK(error_of("json").find("JSON") != std::string::npos);
    CHECK(error_of("error").find("simulator exploded") != std::string::npos);
    CHECK(error_of("displacement").find("'displacement'") != std::string::npos);
    CHECK(error_of("done").find("'done'") != std::string::npos);
    CHECK(error_of("exit").find("status 1") != std::string::npos);
    CHECK_FALSE(error_of("die").empty());
}

TEST_CASE("a silent child times out")
{
    ExternalEnvironment env(kStub + " malformed hang", single_hinge(), EnvConfig{}, 300ms);
    CHECK_THROWS_AS(env.reset(0), ProtocolError);
}

TEST_CASE("missing command fails cleanly")
{
    CHECK_THROWS_AS(ExternalEnvironment("/nonexistent/simulator", single_hinge(), EnvConfig{}, 2000ms),
                    ProtocolError);
}

TEST_CASE("recorded transcripts replay to bit-identical fitness")
{
    const MorphologyTree spider = load_bundled_robot("spider");
    const auto path = std::filesystem::temp_directory_path() / "morphlearn_transcript.jsonl";

    SurrogateEnvironment inner(spider, EnvConfig{});
    double in_process = 0.0;
    {
        std::ofstream sink(path);
        TranscriptRecorder rec(inner, sink);
        CpgPolicy policy(build_cpg(spider, Genome{spider_genome(), "cpg"}), 0.05);
        in_process = evaluate_fitness(rec, policy);
    }
    REQUIRE(in_process > 0.0);

    ExternalEnvironment replay(kStub + " replay " + path.string(), spider, EnvConfig{});
    CpgPolicy policy(build_cpg(spider, Genome{spider_genome(), "cpg"}), 0.05);
    CHECK(evaluate_fitness(replay, policy) == in_process);
    replay.close();
    std::filesystem::remove(path);
}

TEST_CASE("served surrogate matches the in-process surrogate for a closed-loop policy")
{
    const MorphologyTree gecko = load_bundled_robot("gecko");
    RngStream rng(4);
    std::vector<double> g(ann_param_count(gecko));
    g.resize(AnnParams::zeros(gecko.hinge_count()).param_count());
    for (auto& x : g)
        x = rng.uniform(-1, 1);
    AnnPolicy a(genome_decode(gecko, Genome{g, "ann"}));
    AnnPolicy b(genome_decode(gecko, Genome{g, "ann"}));
    SurrogateEnvironment local(gecko, EnvConfig{});
    ExternalEnvironment remote(kCli + " serve-surrogate", gecko, EnvConfig{});
    CHECK(evaluate_fitness(remote, b) == evaluate_fitness(local, a));
}

TEST_CASE("serve_surrogate reports bad requests without exiting")
{
    std::istringstream in("{\"cmd\":\"step\",\"targets\":[0]}\nnot json\n{\"cmd\":\"close\"}\n");
    std::ostringstream out;
    CHECK(serve_surrogate(in, out) == 0);
    const std::string s = out.str();
    CHECK(s.find("before handshake") != std::string::npos);
    CHECK(std::count(s.begin(), s.end(), '\n') == 2);
}
