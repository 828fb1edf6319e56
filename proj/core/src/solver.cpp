#include "viewguard/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <optional>
#include <sstream>

#include "viewguard/errors.hpp"

namespace viewguard {

SolverConfig SolverConfig::from_command(const std::string& command) {
  SolverConfig c;
  std::istringstream in(command);
  std::string word;
  while (in >> word) c.argv.push_back(word);
  if (c.argv.empty()) throw SolverSpawnError("empty solver command");
  c.name = c.argv.front();
  return c;
}

std::vector<SolverConfig> default_solvers() { return {SolverConfig::from_command("z3 -in")}; }

std::string_view to_string(SolverOutcome::Kind k) {
  switch (k) {
    case SolverOutcome::Kind::Unsat: return "unsat";
    case SolverOutcome::Kind::Sat: return "sat";
    case SolverOutcome::Kind::Unknown: return "unknown";
  }
  return "unknown";
}

SolverOutcome parse_solver_output(const std::string& out, const std::vector<std::string>& labels) {
  SolverOutcome r;
  std::istringstream in(out);
  std::string first;
  in >> first;
  if (first == "sat") {
    r.kind = SolverOutcome::Kind::Sat;
    return r;
  }
  if (first != "unsat") {
    r.reason = first == "unknown" ? "unknown" : "solver-error: " + out.substr(0, 200);
    return r;
  }
  r.kind = SolverOutcome::Kind::Unsat;
  std::set<std::string> declared(labels.begin(), labels.end());
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto open = rest.find('(');
  auto close = open == std::string::npos ? std::string::npos : rest.find(')', open);
  bool ok = close != std::string::npos && rest.compare(open, 6, "(error") != 0;
  if (ok) {
    std::istringstream core(rest.substr(open + 1, close - open - 1));
    std::string label;
    while (core >> label) {
      if (!declared.count(label)) {
        ok = false;
        break;
      }
      r.core.insert(label);
    }
  }
  if (!ok) r.core = declared;
  return r;
}

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] {
    struct sigaction current {};
    sigaction(SIGPIPE, nullptr, &current);
    if (current.sa_handler == SIG_DFL) signal(SIGPIPE, SIG_IGN);
  });
}

struct Child {
  const SolverConfig* config = nullptr;
  pid_t pid = -1;
  int out = -1;
  std::string buffer;
  bool done = false;
};

std::optional<Child> spawn(const SolverConfig& config, const std::string& input, std::string& error) {
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) != 0) return std::nullopt;
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    return std::nullopt;
  }
  if (pipe2(err_pipe, O_CLOEXEC) != 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    return std::nullopt;
  }
  pid_t pid = fork();
  if (pid == 0) {
    dup2(in_pipe[0], 0);
    dup2(out_pipe[1], 1);
    int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, 2);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0]}) close(fd);
    std::vector<char*> argv;
    for (const auto& a : config.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    int e = errno;
    (void)!write(err_pipe[1], &e, sizeof e);
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  if (pid < 0) {
    for (int fd : {in_pipe[1], out_pipe[0], err_pipe[0]}) close(fd);
    return std::nullopt;
  }
  int e = 0;
  if (read(err_pipe[0], &e, sizeof e) == static_cast<ssize_t>(sizeof e)) {
    close(err_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    waitpid(pid, nullptr, 0);
    error = config.argv.front() + ": " + std::strerror(e);
    return std::nullopt;
  }
  close(err_pipe[0]);
  std::size_t written = 0;
  while (written < input.size()) {
    ssize_t n = write(in_pipe[1], input.data() + written, input.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    written += static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);
  Child c;
  c.config = &config;
  c.pid = pid;
  c.out = out_pipe[0];
  return c;
}

void reap(Child& c) {
  if (c.out >= 0) close(c.out);
  c.out = -1;
  if (c.pid > 0) {
    kill(c.pid, SIGKILL);
    waitpid(c.pid, nullptr, 0);
    c.pid = -1;
  }
}

SolverOutcome race(const smt::SmtScript& script, const std::vector<SolverConfig>& configs,
                   std::chrono::milliseconds budget, std::optional<std::chrono::milliseconds> window) {
  ignore_sigpipe();
  using Clock = std::chrono::steady_clock;
  auto text = script.render();
  auto labels = script.labels();
  std::vector<Child> children;
  std::string errors;
  for (const auto& cfg : configs) {
    std::string error;
    if (auto c = spawn(cfg, text, error)) children.push_back(std::move(*c));
    else errors += (errors.empty() ? "" : "; ") + (error.empty() ? cfg.name + ": spawn failed" : error);
  }
  if (children.empty()) throw SolverSpawnError(errors.empty() ? "no solver configured" : errors);

  auto deadline = Clock::now() + budget;
  std::optional<SolverOutcome> best;
  std::optional<Clock::time_point> window_end;
  std::string last_unknown = "timeout";
  bool stop = false;
  while (!stop) {
    auto limit = window_end ? std::min(*window_end, deadline) : deadline;
    auto now = Clock::now();
    std::vector<pollfd> fds;
    std::vector<Child*> owners;
    for (auto& c : children) {
      if (c.done) continue;
      fds.push_back({c.out, POLLIN, 0});
      owners.push_back(&c);
    }
    if (fds.empty() || now >= limit) break;
    auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(limit - now).count();
    int n = poll(fds.data(), fds.size(), static_cast<int>(std::max<long>(1, wait)));
    if (n < 0 && errno != EINTR) break;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      Child& c = *owners[i];
      char buf[4096];
      ssize_t got = read(c.out, buf, sizeof buf);
      if (got > 0) {
        c.buffer.append(buf, static_cast<std::size_t>(got));
        continue;
      }
      c.done = true;
      auto outcome = parse_solver_output(c.buffer, labels);
      outcome.solver = c.config->name;
      if (!c.config->supports_cores && outcome.unsat()) {
        outcome.core = std::set<std::string>(labels.begin(), labels.end());
      }
      reap(c);
      if (outcome.kind == SolverOutcome::Kind::Unknown) {
        last_unknown = outcome.reason;
        continue;
      }
      if (!window) {
        best = outcome;
        stop = true;
        break;
      }
      if (outcome.sat()) {
        if (!best) {
          best = outcome;
          stop = true;
          break;
        }
        continue;
      }
      if (!best || outcome.core.size() < best->core.size()) best = outcome;
      if (!window_end) window_end = Clock::now() + *window;
    }
  }
  for (auto& c : children) reap(c);
  if (best) return *best;
  SolverOutcome unknown;
  unknown.reason = last_unknown;
  return unknown;
}

}  // namespace

SolverOutcome solve(const smt::SmtScript& script, const std::vector<SolverConfig>& configs,
                    std::chrono::milliseconds budget) {
  return race(script, configs, budget, std::nullopt);
}

SolverOutcome solve_for_core(const smt::SmtScript& script, const std::vector<SolverConfig>& configs,
                             std::chrono::milliseconds budget, std::chrono::milliseconds window, bool verify) {
  auto result = race(script, configs, budget, window);
  if (!verify || !result.unsat()) return result;
  if (result.core.size() == script.labeled.size()) return result;
  auto check = race(script.restricted_to(result.core), configs, budget, std::nullopt);
  if (!check.unsat()) {
    auto all = script.labels();
    result.core = std::set<std::string>(all.begin(), all.end());
  }
  return result;
}

}  // namespace viewguard
