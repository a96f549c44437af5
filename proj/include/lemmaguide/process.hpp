#pragma once

// Minimal POSIX child process with piped stdin/stdout and deadline reads.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lemmaguide {

class ChildProcess {
 public:
  ChildProcess() = default;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ChildProcess(ChildProcess&& other) noexcept { *this = std::move(other); }
  ChildProcess& operator=(ChildProcess&& other) noexcept {
    if (this != &other) {
      kill();
      pid_ = std::exchange(other.pid_, -1);
      in_ = std::exchange(other.in_, -1);
      out_ = std::exchange(other.out_, -1);
    }
    return *this;
  }
  ~ChildProcess() { kill(); }

  /// Throws std::runtime_error when the pipes or fork fail; exec failure shows
  /// up as EOF on the first read.
  static ChildProcess spawn(const std::vector<std::string>& argv, const std::string& working_dir = {}) {
    if (argv.empty()) throw std::runtime_error("empty command");
    // a dead child must surface as a failed write, not a signal
    ::signal(SIGPIPE, SIG_IGN);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw std::runtime_error("pipe failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw std::runtime_error("pipe failed");
    }
    const pid_t pid = fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
      throw std::runtime_error("fork failed");
    }
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      const int devnull = open("/dev/null", O_WRONLY);
      if (devnull >= 0) dup2(devnull, STDERR_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
      setpgid(0, 0);
      if (!working_dir.empty() && chdir(working_dir.c_str()) != 0) _exit(127);
      execvp(args[0], args.data());
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    ChildProcess child;
    child.pid_ = pid;
    child.in_ = to_child[1];
    child.out_ = from_child[0];
    fcntl(child.in_, F_SETFD, FD_CLOEXEC);
    fcntl(child.out_, F_SETFD, FD_CLOEXEC);
    return child;
  }

  bool running() const { return pid_ > 0; }

  bool write_all(std::string_view data) {
    if (in_ < 0) return false;
    while (!data.empty()) {
      const ssize_t n = ::write(in_, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
  }

  enum class ReadStatus { data, eof, timeout, error };

  /// Appends whatever is available to `buffer`, waiting until `deadline`.
  ReadStatus read_some(std::string& buffer, std::chrono::steady_clock::time_point deadline) {
    if (out_ < 0) return ReadStatus::error;
    while (true) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) return ReadStatus::timeout;
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
      pollfd fd{out_, POLLIN, 0};
      const int ready = ::poll(&fd, 1, static_cast<int>(std::min<long long>(wait + 1, 1 << 30)));
      if (ready < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::error;
      }
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(out_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::error;
      }
      if (n == 0) return ReadStatus::eof;
      buffer.append(chunk, static_cast<std::size_t>(n));
      return ReadStatus::data;
    }
  }

  void kill() {
    if (in_ >= 0) close(std::exchange(in_, -1));
    if (out_ >= 0) close(std::exchange(out_, -1));
    if (pid_ > 0) {
      ::kill(-pid_, SIGKILL);
      ::kill(pid_, SIGKILL);
      int status = 0;
      while (waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
      }
      pid_ = -1;
    }
  }

 private:
  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
};

}  // namespace lemmaguide
