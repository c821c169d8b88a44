#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "odecert/solver.hpp"

namespace odecert {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxResponse = 16u << 20;

struct ChildRun {
  bool spawned = false;
  bool timed_out = false;
  bool got_line = false;
  bool too_big = false;
  int exit_status = -1;  // raw waitpid status, -1 while unknown
  std::string out;
  std::string err;
};

void close_fd(int& fd) {
  if (fd >= 0) close(fd);
  fd = -1;
}

int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(left);
}

bool reap(pid_t pid, int& status, Clock::time_point until) {
  while (true) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) return true;
    if (r < 0 && errno != EINTR) return true;
    if (Clock::now() >= until) return false;
    usleep(5000);
  }
}

ChildRun run_child(const std::vector<std::string>& argv, const std::string& input, double timeout) {
  ChildRun run;
  int in[2], out[2], err[2], status_pipe[2];
  if (pipe2(in, O_CLOEXEC) || pipe2(out, O_CLOEXEC) || pipe2(err, O_CLOEXEC) ||
      pipe2(status_pipe, O_CLOEXEC))
    return run;
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in[0], in[1], out[0], out[1], err[0], err[1], status_pipe[0], status_pipe[1]}) close(fd);
    return run;
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(in[0], 0);
    dup2(out[1], 1);
    dup2(err[1], 2);
    signal(SIGPIPE, SIG_DFL);
    execvp(args[0], args.data());
    int e = errno;
    ssize_t ignored = write(status_pipe[1], &e, sizeof e);
    (void)ignored;
    _exit(127);
  }
  setpgid(pid, pid);
  close(in[0]);
  close(out[1]);
  close(err[1]);
  close(status_pipe[1]);
  int exec_errno = 0;
  run.spawned = read(status_pipe[0], &exec_errno, sizeof exec_errno) <= 0;
  close(status_pipe[0]);

  auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout));
  int wfd = in[1], rfd = out[0], efd = err[0];
  fcntl(wfd, F_SETFL, O_NONBLOCK);
  std::size_t written = 0;
  if (!run.spawned) close_fd(wfd);

  while (run.spawned && (rfd >= 0 || efd >= 0) && !run.got_line) {
    pollfd fds[3];
    int n = 0;
    int wi = -1, ri = -1, ei = -1;
    if (wfd >= 0) fds[wi = n++] = {wfd, POLLOUT, 0};
    if (rfd >= 0) fds[ri = n++] = {rfd, POLLIN, 0};
    if (efd >= 0) fds[ei = n++] = {efd, POLLIN, 0};
    int left = remaining_ms(deadline);
    if (left == 0) {
      run.timed_out = true;
      break;
    }
    int rc = poll(fds, n, left);
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) break;
    if (rc == 0) {
      run.timed_out = true;
      break;
    }
    if (wi >= 0 && fds[wi].revents) {
      if (fds[wi].revents & POLLOUT) {
        ssize_t k = write(wfd, input.data() + written, input.size() - written);
        if (k > 0) written += static_cast<std::size_t>(k);
        if (k < 0 && errno != EAGAIN && errno != EINTR) close_fd(wfd);
        if (written == input.size()) close_fd(wfd);
      } else {
        close_fd(wfd);
      }
    }
    char buf[65536];
    if (ri >= 0 && fds[ri].revents) {
      ssize_t k = read(rfd, buf, sizeof buf);
      if (k > 0) {
        run.out.append(buf, static_cast<std::size_t>(k));
        auto nl = run.out.find('\n');
        if (nl != std::string::npos) {
          run.out.resize(nl);
          run.got_line = true;
        } else if (run.out.size() > kMaxResponse) {
          run.too_big = true;
          break;
        }
      } else if (k == 0 || (errno != EAGAIN && errno != EINTR)) {
        close_fd(rfd);
      }
    }
    if (ei >= 0 && fds[ei].revents) {
      ssize_t k = read(efd, buf, sizeof buf);
      if (k > 0) {
        run.err.append(buf, static_cast<std::size_t>(k));
        if (run.err.size() > 4096) run.err.erase(0, run.err.size() - 4096);
      } else if (k == 0 || (errno != EAGAIN && errno != EINTR)) {
        close_fd(efd);
      }
    }
  }
  close_fd(wfd);

  int status = 0;
  if (run.timed_out || run.too_big || !run.spawned) {
    close_fd(rfd);
    close_fd(efd);
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
    waitpid(pid, &status, 0);
    if (!run.spawned) run.exit_status = status;
    return run;
  }
  // After a full response the child may exit or wait for another request.
  // Its output pipes stay open meanwhile so late writes do not fail.
  auto until = std::min(deadline, Clock::now() + std::chrono::milliseconds(run.got_line ? 500 : 2000));
  if (reap(pid, status, until)) {
    run.exit_status = status;
  } else {
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
    waitpid(pid, &status, 0);
    if (!run.got_line) run.timed_out = true;
  }
  close_fd(rfd);
  close_fd(efd);
  return run;
}

std::string tail(const std::string& s) {
  auto b = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::string t = s.substr(0, b + 1);
  auto nl = t.rfind('\n');
  return nl == std::string::npos ? t : t.substr(nl + 1);
}

}  // namespace

SolveResult request_external(const OdeSystem& sys, const BackendSpec& spec,
                             const std::vector<std::string>& assumptions) {
  static const bool sigpipe_ignored = [] {
    signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;

  SolveResult res;
  res.backend = spec.id;
  auto error = [&](std::string detail) {
    res.status = SolveResult::Status::BackendError;
    res.detail = std::move(detail);
    return res;
  };
  if (spec.command.empty()) return error("no command configured for backend '" + spec.id + "' (set ODECERT_BRIDGE_CMD)");
  if (!(spec.timeout > 0)) return error("timeout must be positive");

  ChildRun run = run_child(spec.command, encode_request(sys, assumptions) + "\n", spec.timeout);
  if (!run.spawned) return error("could not execute '" + spec.command.back() + "'");
  if (run.timed_out) return error("timeout after " + std::to_string(spec.timeout) + " s");
  if (run.too_big) return error("response too large");
  if (run.exit_status >= 0) {
    if (WIFEXITED(run.exit_status) && WEXITSTATUS(run.exit_status) != 0) {
      std::string msg = "backend exited with status " + std::to_string(WEXITSTATUS(run.exit_status));
      if (auto e = tail(run.err); !e.empty()) msg += ": " + e;
      return error(msg);
    }
    if (WIFSIGNALED(run.exit_status))
      return error("backend killed by signal " + std::to_string(WTERMSIG(run.exit_status)));
  }
  if (!run.got_line && run.out.empty()) return error("backend closed its output without a response");
  SolveResult decoded = decode_response(run.out, sys, assumptions);
  decoded.backend = spec.id;
  return decoded;
}

}  // namespace odecert
