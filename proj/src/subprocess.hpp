#pragma once

#include <string>

namespace cw {

// Line-oriented child process used by the adapter backends: one JSON request
// per line on its stdin, one JSON response per line on its stdout. The child
// is spawned once and reused for the whole corpus.
class LineProcess {
 public:
  explicit LineProcess(const std::string& command);
  ~LineProcess();

  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  // Writes one line, reads one line. Throws ErrorKind::Extraction if the
  // child is gone or misbehaves; the message carries its exit status.
  std::string round_trip(const std::string& request_line);

  const std::string& command() const { return command_; }

 private:
  void close_pipes();
  int wait_exit();

  std::string command_;
  long pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string read_buffer_;
};

}  // namespace cw
