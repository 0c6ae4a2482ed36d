#include "morphlearn/external_env.hpp"

#include "morphlearn/error.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace morphlearn {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int remaining_ms(Clock::time_point deadline)
{
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left < 0 ? 0 : static_cast<int>(left);
}

} // namespace

ChildProcess::ChildProcess(const std::string& command)
{
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
        throw ProtocolError(std::string("socketpair failed: ") + std::strerror(errno));

    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw ProtocolError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        // Own process group, so a kill also reaches anything the shell spawned.
        ::setpgid(0, 0);
        ::dup2(fds[1], STDIN_FILENO);
        ::dup2(fds[1], STDOUT_FILENO);
        ::execv("/bin/sh", const_cast<char* const*>(argv));
        ::_exit(127);
    }
    ::close(fds[1]);
    ::setpgid(pid, pid);
    pid_ = pid;
    fd_ = fds[0];
}

ChildProcess::~ChildProcess()
{
    if (fd_ >= 0)
        ::close(fd_);
    if (pid_ > 0)
        wait(std::chrono::milliseconds(1000));
}

void ChildProcess::kill_now() noexcept
{
    if (pid_ <= 0)
        return;
    ::kill(-pid_, SIGKILL);
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
}

void ChildProcess::write_line(const std::string& line, std::chrono::milliseconds timeout)
{
    const std::string data = line + "\n";
    const auto deadline = Clock::now() + timeout;
    std::size_t sent = 0;
    while (sent < data.size()) {
        pollfd p{fd_, POLLOUT, 0};
        const int ready = ::poll(&p, 1, remaining_ms(deadline));
        if (ready < 0 && errno == EINTR)
            continue;
        if (ready == 0)
            throw ProtocolError("timeout writing to external environment");
        const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN)
                continue;
            throw ProtocolError("external environment closed its input (child exited?)");
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::string ChildProcess::read_line(std::chrono::milliseconds timeout)
{
    const auto deadline = Clock::now() + timeout;
    for (;;) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        pollfd p{fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, remaining_ms(deadline));
        if (ready < 0 && errno == EINTR)
            continue;
        if (ready == 0)
            throw ProtocolError("timeout waiting for external environment reply");
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN)
                continue;
            throw ProtocolError(std::string("read from external environment failed: ") + std::strerror(errno));
        }
        if (n == 0)
            throw ProtocolError("external environment exited before replying");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

int ChildProcess::wait(std::chrono::milliseconds timeout)
{
    if (pid_ <= 0)
        return -1;
    const auto deadline = Clock::now() + timeout;
    for (;;) {
        int status = 0;
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            pid_ = -1;
            if (WIFEXITED(status))
                return WEXITSTATUS(status);
            return -1;
        }
        if (r < 0 && errno != EINTR) {
            pid_ = -1;
            return -1;
        }
        if (Clock::now() >= deadline) {
            kill_now();
            return -1;
        }
        ::usleep(1000);
    }
}

std::string format_number(double value)
{
    if (!std::isfinite(value))
        throw NumericError("cannot serialize a non-finite number");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

std::string number_array(std::span<const double> values)
{
    std::string s = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            s += ",";
        s += format_number(values[i]);
    }
    return s + "]";
}

std::string config_object(const EnvConfig& c)
{
    return "{\"control_dt\":" + format_number(c.control_dt) + ",\"hinge_range\":" + format_number(c.hinge_range)
           + ",\"horizon\":" + format_number(c.horizon) + ",\"max_speed\":" + format_number(c.max_speed)
           + ",\"module_length\":" + format_number(c.module_length)
           + ",\"recovery_ratio\":" + format_number(c.recovery_ratio)
           + ",\"thrust_gain\":" + format_number(c.thrust_gain) + "}";
}

const json& field(const json& reply, const char* name)
{
    if (!reply.is_object() || !reply.contains(name))
        throw ProtocolError(std::string("reply missing field '") + name + "'");
    return reply.at(name);
}

std::vector<double> number_list(const json& value, const char* name)
{
    if (!value.is_array())
        throw ProtocolError(std::string("field '") + name + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(value.size());
    for (const auto& v : value) {
        if (!v.is_number())
            throw ProtocolError(std::string("field '") + name + "' contains a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace

std::string handshake_message(const MorphologyTree& tree, const EnvConfig& config)
{
    return "{\"cmd\":\"handshake\",\"version\":1,\"morphology\":" + morphology_to_json(tree).dump()
           + ",\"config\":" + config_object(config) + "}";
}

std::string reset_message(std::uint64_t seed)
{
    return "{\"cmd\":\"reset\",\"seed\":" + std::to_string(seed) + "}";
}

std::string step_message(std::span<const double> targets)
{
    return "{\"cmd\":\"step\",\"targets\":" + number_array(targets) + "}";
}

std::string close_message() { return "{\"cmd\":\"close\"}"; }

std::string handshake_reply(std::size_t hinges)
{
    return "{\"ok\":true,\"n_hinges\":" + std::to_string(hinges) + "}";
}

std::string obs_reply(const Observation& obs) { return "{\"obs\":" + number_array(obs.values) + "}"; }

std::string step_reply(const StepResult& r)
{
    return "{\"obs\":" + number_array(r.observation.values) + ",\"displacement\":" + number_array(r.displacement)
           + ",\"done\":" + (r.done ? "true" : "false") + "}";
}

ExternalEnvironment::ExternalEnvironment(const std::string& command, const MorphologyTree& tree, EnvConfig config,
                                         std::chrono::milliseconds timeout)
    : child_(std::make_unique<ChildProcess>(command)), config_(config), timeout_(timeout)
{
    config_.validate();
    const json reply = request(handshake_message(tree, config_));
    const json& ok = field(reply, "ok");
    if (!ok.is_boolean() || !ok.get<bool>())
        throw ProtocolError("handshake rejected: field 'ok' is not true");
    const json& n = field(reply, "n_hinges");
    if (!n.is_number_integer())
        throw ProtocolError("field 'n_hinges' must be an integer");
    hinges_ = n.get<std::size_t>();
    if (hinges_ != tree.hinge_count())
        throw ProtocolError("field 'n_hinges' reports " + std::to_string(hinges_) + " hinges, morphology has "
                            + std::to_string(tree.hinge_count()));
}

ExternalEnvironment::~ExternalEnvironment()
{
    if (!closed_) {
        try {
            close();
        } catch (const std::exception&) {
        }
    }
}

json ExternalEnvironment::request(const std::string& line)
{
    if (closed_)
        throw ProtocolError("external environment already closed");
    child_->write_line(line, timeout_);
    const std::string reply = child_->read_line(timeout_);
    json doc;
    try {
        doc = json::parse(reply);
    } catch (const json::exception&) {
        throw ProtocolError("reply is not valid JSON: '" + reply.substr(0, 120) + "'");
    }
    if (doc.is_object() && doc.contains("error"))
        throw ProtocolError("external environment reported error: " + doc.at("error").dump());
    return doc;
}

Observation ExternalEnvironment::parse_obs(const json& reply) const
{
    Observation obs{number_list(field(reply, "obs"), "obs")};
    if (obs.values.size() != observation_size(hinges_))
        throw ProtocolError("field 'obs' has " + std::to_string(obs.values.size()) + " entries, expected "
                            + std::to_string(observation_size(hinges_)));
    return obs;
}

Observation ExternalEnvironment::reset(std::uint64_t seed) { return parse_obs(request(reset_message(seed))); }

StepResult ExternalEnvironment::step(std::span<const double> targets)
{
    if (targets.size() != hinges_)
        throw DimensionError("step: expected " + std::to_string(hinges_) + " targets");
    const json reply = request(step_message(targets));
    StepResult r;
    r.observation = parse_obs(reply);
    const auto d = number_list(field(reply, "displacement"), "displacement");
    if (d.size() != 2)
        throw ProtocolError("field 'displacement' must hold exactly two numbers");
    r.displacement = {d[0], d[1]};
    const json& done = field(reply, "done");
    if (!done.is_boolean())
        throw ProtocolError("field 'done' must be a boolean");
    r.done = done.get<bool>();
    return r;
}

void ExternalEnvironment::close()
{
    if (closed_)
        return;
    closed_ = true;
    try {
        child_->write_line(close_message(), timeout_);
    } catch (const ProtocolError&) {
        // Child may already be gone; its exit status decides below.
    }
    const int status = child_->wait(timeout_);
    if (status != 0)
        throw ProtocolError("external environment exited with status " + std::to_string(status));
}

EnvironmentFactory external_factory(std::string command, EnvConfig config, std::chrono::milliseconds timeout)
{
    return [command = std::move(command), config, timeout](const MorphologyTree& tree) -> std::unique_ptr<Environment> {
        return std::make_unique<ExternalEnvironment>(command, tree, config, timeout);
    };
}

int serve_surrogate(std::istream& in, std::ostream& out)
{
    std::unique_ptr<SurrogateEnvironment> env;
    std::string line;
    auto reply = [&out](const std::string& s) { out << s << "\n" << std::flush; };
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        try {
            const json msg = json::parse(line);
            const std::string cmd = msg.at("cmd").get<std::string>();
            if (cmd == "handshake") {
                if (msg.at("version").get<int>() != 1)
                    throw ProtocolError("unsupported protocol version");
                const MorphologyTree tree = morphology_from_json(msg.at("morphology"));
                env = std::make_unique<SurrogateEnvironment>(tree, env_config_from_json(msg.at("config")));
                reply(handshake_reply(env->hinge_count()));
            } else if (cmd == "reset") {
                if (!env)
                    throw ProtocolError("reset before handshake");
                reply(obs_reply(env->reset(msg.at("seed").get<std::uint64_t>())));
            } else if (cmd == "step") {
                if (!env)
                    throw ProtocolError("step before handshake");
                const auto targets = msg.at("targets").get<std::vector<double>>();
                reply(step_reply(env->step(targets)));
            } else if (cmd == "close") {
                return 0;
            } else {
                throw ProtocolError("unknown command '" + cmd + "'");
            }
        } catch (const std::exception& e) {
            reply(json{{"error", e.what()}}.dump());
        }
    }
    return 0;
}

TranscriptRecorder::TranscriptRecorder(Environment& inner, std::ostream& sink) : inner_(inner), sink_(sink)
{
    sink_ << handshake_reply(inner_.hinge_count()) << "\n";
}

Observation TranscriptRecorder::reset(std::uint64_t seed)
{
    Observation obs = inner_.reset(seed);
    sink_ << obs_reply(obs) << "\n";
    return obs;
}

StepResult TranscriptRecorder::step(std::span<const double> targets)
{
    StepResult r = inner_.step(targets);
    sink_ << step_reply(r) << "\n";
    return r;
}

} // namespace morphlearn
