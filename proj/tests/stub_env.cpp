// Scripted child for protocol tests.
//   stub_env fixed <hinges> <steps>     constant displacement, done after <steps>
//   stub_env malformed <fault>          valid handshake, then a broken reply
//   stub_env replay <transcript>        answers each request with the next line
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

using nlohmann::json;

namespace {

void send(const std::string& s) { std::cout << s << "\n" << std::flush; }

json zero_obs(int hinges)
{
    std::vector<double> v(static_cast<std::size_t>(3 * hinges), 0.0);
    v.insert(v.end(), {1.0, 0.0, 0.0, 0.0});
    return v;
}

int fixed(int hinges, int steps)
{
    std::string line;
    int taken = 0;
    while (std::getline(std::cin, line)) {
        const json msg = json::parse(line);
        const std::string cmd = msg.at("cmd");
        if (cmd == "handshake") {
            send(json{{"ok", true}, {"n_hinges", hinges}}.dump());
        } else if (cmd == "reset") {
            taken = 0;
            send(json{{"obs", zero_obs(hinges)}}.dump());
        } else if (cmd == "step") {
            if (msg.at("targets").size() != static_cast<std::size_t>(hinges)) {
                send(json{{"error", "wrong target count"}}.dump());
                continue;
            }
            ++taken;
            send(json{{"obs", zero_obs(hinges)}, {"displacement", {0.5, 0.0}}, {"done", taken >= steps}}.dump());
        } else if (cmd == "close") {
            return 0;
        }
    }
    return 0;
}

int malformed(const std::string& fault)
{
    std::string line;
    while (std::getline(std::cin, line)) {
        const json msg = json::parse(line);
        const std::string cmd = msg.at("cmd");
        if (cmd == "handshake") {
            if (fault == "n_hinges")
                send(json{{"ok", true}, {"n_hinges", 99}}.dump());
            else if (fault == "ok")
                send(json{{"ok", false}}.dump());
            else
                send(json{{"ok", true}, {"n_hinges", 1}}.dump());
        } else if (cmd == "reset") {
            if (fault == "obs")
                send(json{{"obs", "nope"}}.dump());
            else if (fault == "json")
                send("{not json");
            else if (fault == "error")
                send(json{{"error", "simulator exploded"}}.dump());
            else if (fault == "hang")
                std::this_thread::sleep_for(std::chrono::hours(1));
            else if (fault == "die")
                std::exit(4);
            else
                send(json{{"obs", zero_obs(1)}}.dump());
        } else if (cmd == "step") {
            if (fault == "displacement")
                send(json{{"obs", zero_obs(1)}, {"displacement", {1.0}}, {"done", false}}.dump());
            else if (fault == "done")
                send(json{{"obs", zero_obs(1)}, {"displacement", {1.0, 0.0}}, {"done", "yes"}}.dump());
            else
                send(json{{"obs", zero_obs(1)}, {"displacement", {1.0, 0.0}}, {"done", true}}.dump());
        } else if (cmd == "close") {
            return fault == "exit" ? 1 : 0;
        }
    }
    return 0;
}

int replay(const std::string& path)
{
    std::ifstream transcript(path);
    if (!transcript) {
        std::cerr << "stub_env: cannot open " << path << "\n";
        return 2;
    }
    std::string request, reply;
    while (std::getline(std::cin, request)) {
        if (json::parse(request).at("cmd") == "close")
            return 0;
        if (!std::getline(transcript, reply)) {
            send(json{{"error", "transcript exhausted"}}.dump());
            continue;
        }
        send(reply);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv + 1, argv + argc);
    if (args.size() == 3 && args[0] == "fixed")
        return fixed(std::stoi(args[1]), std::stoi(args[2]));
    if (args.size() == 2 && args[0] == "malformed")
        return malformed(args[1]);
    if (args.size() == 2 && args[0] == "replay")
        return replay(args[1]);
    std::cerr << "usage: stub_env fixed <hinges> <steps> | malformed <fault> | replay <transcript>\n";
    return 2;
}
