#include "subprocess.hpp"

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>

#include "errors.hpp"

namespace cw {

namespace {

// A child that exits early would otherwise kill us with SIGPIPE on the next
// write; we want the EPIPE errno path instead.
void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

[[noreturn]] void child_exec(const std::string& command, int in_fd, int out_fd) {
  ::dup2(in_fd, STDIN_FILENO);
  ::dup2(out_fd, STDOUT_FILENO);
  ::close(in_fd);
  ::close(out_fd);
  ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
  ::_exit(127);
}

}  // namespace

LineProcess::LineProcess(const std::string& command) : command_(command) {
  ignore_sigpipe();
  int to_pipe[2];
  int from_pipe[2];
  if (::pipe(to_pipe) != 0 || ::pipe(from_pipe) != 0) {
    raise(ErrorKind::Io, "pipe() failed: " + std::string(std::strerror(errno)));
  }
  pid_t pid = ::fork();
  if (pid < 0) {
    raise(ErrorKind::Io, "fork() failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::close(to_pipe[1]);
    ::close(from_pipe[0]);
    child_exec(command, to_pipe[0], from_pipe[1]);
  }
  ::close(to_pipe[0]);
  ::close(from_pipe[1]);
  pid_ = pid;
  to_child_ = to_pipe[1];
  from_child_ = from_pipe[0];
}

LineProcess::~LineProcess() {
  close_pipes();
  if (pid_ > 0) wait_exit();
}

void LineProcess::close_pipes() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = -1;
  from_child_ = -1;
}

int LineProcess::wait_exit() {
  int status = 0;
  ::waitpid(static_cast<pid_t>(pid_), &status, 0);
  pid_ = -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

std::string LineProcess::round_trip(const std::string& request_line) {
  if (pid_ <= 0 || to_child_ < 0) {
    raise(ErrorKind::Extraction, "adapter process is not running: " + command_);
  }
  std::string line = request_line;
  line.push_back('\n');
  std::size_t written = 0;
  while (written < line.size()) {
    ssize_t n = ::write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      close_pipes();
      int code = wait_exit();
      raise(ErrorKind::Extraction, "adapter process rejected input (exit status " +
                                       std::to_string(code) + "): " + command_);
    }
    written += static_cast<std::size_t>(n);
  }

  // Read until a newline shows up in the buffer.
  for (;;) {
    auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string out = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      if (!out.empty() && out.back() == '\r') out.pop_back();
      return out;
    }
    char chunk[4096];
    ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n > 0) {
      read_buffer_.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    close_pipes();
    int code = wait_exit();
    raise(ErrorKind::Extraction, "adapter process closed its output (exit status " +
                                     std::to_string(code) + "): " + command_);
  }
}

}  // namespace cw
