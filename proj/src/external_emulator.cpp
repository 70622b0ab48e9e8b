#include "duqbench/external_emulator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "duqbench/errors.hpp"

namespace duqbench {

namespace {

using nlohmann::json;

class Subprocess {
 public:
  explicit Subprocess(const std::string& command) {
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw FitFailure("external: pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw FitFailure("external: fork() failed");
    if (pid_ == 0) {
      ::setpgid(0, 0);  // own process group so terminate() reaps helpers too
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
  }

  ~Subprocess() { terminate(); }

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  void terminate() {
    if (in_fd_ >= 0) { ::close(in_fd_); in_fd_ = -1; }
    if (out_fd_ >= 0) { ::close(out_fd_); out_fd_ = -1; }
    if (pid_ > 0) {
      ::kill(-pid_, SIGKILL);  // the whole process group
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  bool alive() const { return pid_ > 0; }

  void write_line(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    std::size_t off = 0;
    while (off < payload.size()) {
      const ssize_t k = ::write(in_fd_, payload.data() + off,
                                payload.size() - off);
      if (k < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("external: write failed: ") +
                    std::strerror(errno));
      }
      off += static_cast<std::size_t>(k);
    }
  }

  // Reads one '\n'-terminated line. timeout_seconds <= 0 blocks forever.
  // Returns false on timeout.
  bool read_line(double timeout_seconds, std::string* line) {
    const auto deadline_ms = timeout_seconds > 0.0
                                 ? static_cast<long>(timeout_seconds * 1000.0)
                                 : -1L;
    long spent_ms = 0;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        *line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return true;
      }
      int wait_ms = -1;
      if (deadline_ms >= 0) {
        wait_ms = static_cast<int>(deadline_ms - spent_ms);
        if (wait_ms <= 0) return false;
      }
      struct pollfd pfd{out_fd_, POLLIN, 0};
      const auto t0 = std::chrono::steady_clock::now();
      const int pr = ::poll(&pfd, 1, wait_ms);
      spent_ms += std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      if (pr == 0) return false;
      if (pr < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("external: poll failed: ") +
                    std::strerror(errno));
      }
      char chunk[4096];
      const ssize_t k = ::read(out_fd_, chunk, sizeof(chunk));
      if (k < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("external: read failed: ") +
                    std::strerror(errno));
      }
      if (k == 0) {
        throw Error("external: process closed stdout");
      }
      buffer_.append(chunk, static_cast<std::size_t>(k));
    }
  }

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

json matrix_to_json(const Eigen::MatrixXd& x) {
  json rows = json::array();
  for (int i = 0; i < x.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct ExternalState {
  std::unique_ptr<Subprocess> proc;
  std::mutex mu;  // one request/response conversation at a time
  json model_id;
  double timeout_seconds = 0.0;
  std::string command;
};

// Sends `request` and parses one JSON response line; on any protocol problem
// terminates the process and throws Err with diagnostics.
template <typename Err>
json roundtrip(ExternalState& st, const json& request, const char* stage) {
  std::string reply;
  try {
    st.proc->write_line(request.dump());
    if (!st.proc->read_line(st.timeout_seconds, &reply)) {
      st.proc->terminate();
      throw Err(std::string("external ") + stage + " timeout after " +
                std::to_string(st.timeout_seconds) + "s (command: " +
                st.command + ")");
    }
  } catch (const Error& e) {
    st.proc->terminate();
    throw Err(std::string("external ") + stage + " failed: " + e.what());
  }
  json resp = json::parse(reply, nullptr, /*allow_exceptions=*/false);
  if (resp.is_discarded() || !resp.is_object() || !resp.contains("ok")) {
    st.proc->terminate();
    throw Err(std::string("external ") + stage +
              ": malformed response line: " + reply.substr(0, 200));
  }
  if (!resp["ok"].get<bool>()) {
    const std::string msg = resp.value("msg", std::string("(no msg)"));
    st.proc->terminate();
    throw Err(std::string("external ") + stage + " reported failure: " + msg);
  }
  return resp;
}

class ExternalEmulator final : public Emulator {
 public:
  std::string name() const override { return "external"; }

  FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, std::uint64_t seed) const override {
    check_training_data(X, y, 1);
    const std::string command = spec.str("command", "");
    if (command.empty()) {
      throw ConfigError("external emulator requires a 'command' hyperparameter");
    }
    auto st = std::make_shared<ExternalState>();
    st->command = command;
    st->timeout_seconds = spec.num("timeout_seconds", 0.0);
    st->proc = std::make_unique<Subprocess>(command);

    json req;
    req["op"] = "fit";
    req["X"] = matrix_to_json(X);
    req["y"] = std::vector<double>(y.data(), y.data() + y.size());
    req["seed"] = seed;
    json resp = roundtrip<FitFailure>(*st, req, "fit");
    if (!resp.contains("model_id")) {
      st->proc->terminate();
      throw FitFailure("external fit: response missing model_id");
    }
    st->model_id = resp["model_id"];
    return FittedModel{name(), st, seed, 0.0};
  }

  PredictiveEnsemble predict(const FittedModel& model,
                             const Eigen::MatrixXd& X_test, int M,
                             std::uint64_t seed) const override {
    if (M < 2) throw DomainError("predict requires M >= 2");
    auto st = std::static_pointer_cast<ExternalState>(
        std::const_pointer_cast<void>(model.state));
    std::lock_guard<std::mutex> lock(st->mu);
    if (!st->proc || !st->proc->alive()) {
      throw PredFailure("external predict: process is not running");
    }
    json req;
    req["op"] = "predict";
    req["model_id"] = st->model_id;
    req["X"] = matrix_to_json(X_test);
    req["M"] = M;
    req["seed"] = seed;
    json resp = roundtrip<PredFailure>(*st, req, "pred");
    if (!resp.contains("draws") || !resp["draws"].is_array()) {
      st->proc->terminate();
      throw PredFailure("external predict: response missing draws");
    }
    const auto& draws = resp["draws"];
    const int m = static_cast<int>(X_test.rows());
    if (static_cast<int>(draws.size()) != M) {
      st->proc->terminate();
      throw PredFailure("external predict: expected " + std::to_string(M) +
                        " draw rows, got " + std::to_string(draws.size()));
    }
    PredictiveEnsemble out;
    out.draws.resize(M, m);
    for (int j = 0; j < M; ++j) {
      if (!draws[j].is_array() || static_cast<int>(draws[j].size()) != m) {
        st->proc->terminate();
        throw PredFailure("external predict: draw row " + std::to_string(j) +
                          " has wrong length");
      }
      for (int i = 0; i < m; ++i) {
        out.draws(j, i) = draws[j][i].get<double>();
      }
    }
    return out;
  }
};

}  // namespace

const Emulator& external_emulator_instance() {
  static const ExternalEmulator e;
  return e;
}

}  // namespace duqbench
