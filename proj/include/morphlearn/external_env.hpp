#pragma once

#include "morphlearn/environment.hpp"

#include <chrono>
#include <iosfwd>
#include <memory>
#include <string>
#include <sys/types.h>

namespace morphlearn {

// Child process started through /bin/sh -c, wired to us over a Unix socket
// pair (its stdin and stdout). Lines are exchanged with per-call timeouts.
class ChildProcess {
public:
    explicit ChildProcess(const std::string& command);
    ~ChildProcess();

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    void write_line(const std::string& line, std::chrono::milliseconds timeout);
    std::string read_line(std::chrono::milliseconds timeout);
    // Waits for exit; returns the exit status, or -1 if it had to be killed.
    int wait(std::chrono::milliseconds timeout);
    bool running() const noexcept { return pid_ > 0; }

private:
    void kill_now() noexcept;

    pid_t pid_ = -1;
    int fd_ = -1;
    std::string buffer_;
};

inline constexpr std::chrono::milliseconds kDefaultProtocolTimeout{10000};

// Shortest decimal form that uses 17 significant digits (%.17g).
std::string format_number(double value);

// Wire messages, one JSON object per line.
std::string handshake_message(const MorphologyTree& tree, const EnvConfig& config);
std::string reset_message(std::uint64_t seed);
std::string step_message(std::span<const double> targets);
std::string close_message();
std::string handshake_reply(std::size_t hinges);
std::string obs_reply(const Observation& obs);
std::string step_reply(const StepResult& result);

// Environment whose dynamics live in a child process speaking the
// line-delimited protocol:
//   -> {"cmd":"handshake","version":1,"morphology":{...},"config":{...}}  <- {"ok":true,"n_hinges":N}
//   -> {"cmd":"reset","seed":S}                                          <- {"obs":[...]}
//   -> {"cmd":"step","targets":[...]}                                    <- {"obs":[...],"displacement":[dx,dy],"done":b}
//   -> {"cmd":"close"}                                                   (child exits 0)
class ExternalEnvironment final : public Environment {
public:
    ExternalEnvironment(const std::string& command, const MorphologyTree& tree, EnvConfig config,
                        std::chrono::milliseconds timeout = kDefaultProtocolTimeout);
    ~ExternalEnvironment() override;

    Observation reset(std::uint64_t seed) override;
    StepResult step(std::span<const double> targets) override;
    std::size_t hinge_count() const override { return hinges_; }
    const EnvConfig& config() const override { return config_; }

    // Sends close and waits for a clean exit; throws ProtocolError otherwise.
    void close();

private:
    nlohmann::json request(const std::string& line);
    Observation parse_obs(const nlohmann::json& reply) const;

    std::unique_ptr<ChildProcess> child_;
    EnvConfig config_;
    std::size_t hinges_ = 0;
    std::chrono::milliseconds timeout_;
    bool closed_ = false;
};

EnvironmentFactory external_factory(std::string command, EnvConfig config,
                                    std::chrono::milliseconds timeout = kDefaultProtocolTimeout);

// Serves the protocol from a built-in surrogate: reads requests from `in`,
// writes replies to `out`. Returns the process exit status.
int serve_surrogate(std::istream& in, std::ostream& out);

// Wraps an environment and writes the replies it produces, in protocol
// form, one per line: a handshake reply, then obs/step replies.
class TranscriptRecorder final : public Environment {
public:
    TranscriptRecorder(Environment& inner, std::ostream& sink);

    Observation reset(std::uint64_t seed) override;
    StepResult step(std::span<const double> targets) override;
    std::size_t hinge_count() const override { return inner_.hinge_count(); }
    const EnvConfig& config() const override { return inner_.config(); }

private:
    Environment& inner_;
    std::ostream& sink_;
};

} // namespace morphlearn
