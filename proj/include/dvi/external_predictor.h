// Copyright 2026 The DVI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Black-box predictors behind a child process, protocol v1.
//
// For each Predict() call the configured command is launched and receives on
// stdin
//
//   #predict n=<n> p=<p> q=<q>
//   <n comma-separated rows of p reals>
//
// and must answer on stdout with n rows of q comma-separated finite reals
// followed by a line "#end", then exit with status 0. Calls on one handle are
// serialized.

#ifndef DVI_EXTERNAL_PREDICTOR_H_
#define DVI_EXTERNAL_PREDICTOR_H_

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/predictors.h"
#include "dvi/status.h"

namespace dvi {

inline constexpr char kProtocolVersion[] = "v1";

namespace external_internal {

inline void AppendDouble(std::string* out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out->append(buf, len);
}

inline std::string EncodeRequest(const Eigen::MatrixXd& x, int q) {
  std::string out = absl::StrCat("#predict n=", x.rows(), " p=", x.cols(),
                                 " q=", q, "\n");
  out.reserve(out.size() + x.size() * 24);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j > 0) out.push_back(',');
      AppendDouble(&out, x(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

inline absl::Status ParseRow(std::string_view line, int width, double* out) {
  int count = 0;
  size_t pos = 0;
  while (pos <= line.size()) {
    size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) comma = line.size();
    std::string_view cell = line.substr(pos, comma - pos);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\t')) cell.remove_suffix(1);
    if (count >= width) {
      return absl::DataLossError(absl::StrCat("row has more than ", width, " values"));
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      return absl::DataLossError(absl::StrCat("malformed value '", std::string(cell), "'"));
    }
    out[count++] = v;
    pos = comma + 1;
  }
  if (count != width) {
    return absl::DataLossError(absl::StrCat("row has ", count, " values, expected ", width));
  }
  return absl::OkStatus();
}

inline absl::StatusOr<Eigen::MatrixXd> DecodeResponse(const std::string& text,
                                                      Eigen::Index n, int q) {
  Eigen::MatrixXd out(n, q);
  std::vector<double> row(q);
  Eigen::Index i = 0;
  bool ended = false;
  std::string_view rest(text);
  while (!rest.empty()) {
    const size_t eol = std::min(rest.find('\n'), rest.size());
    std::string_view line = rest.substr(0, eol);
    rest.remove_prefix(std::min(eol + 1, rest.size()));
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line == "#end") {
      ended = true;
      break;
    }
    if (i >= n) return absl::DataLossError("response has too many rows");
    DVI_RETURN_IF_ERROR(ParseRow(line, q, row.data()));
    for (int c = 0; c < q; ++c) out(i, c) = row[c];
    ++i;
  }
  if (!ended) return absl::DataLossError("response is missing the #end marker");
  if (i != n) {
    return absl::DataLossError(absl::StrCat("response has ", i, " rows, expected ", n));
  }
  return out;
}

}  // namespace external_internal

class ExternalPredictor : public Predictor {
 public:
  ExternalPredictor(std::vector<std::string> command, int num_features,
                    int output_arity, double timeout_seconds = 60.0)
      : command_(std::move(command)),
        p_(num_features),
        q_(output_arity),
        timeout_seconds_(timeout_seconds) {}

  int num_features() const override { return p_; }
  int output_arity() const override { return q_; }
  bool concurrent() const override { return false; }
  const std::vector<std::string>& command() const { return command_; }

  absl::StatusOr<Eigen::MatrixXd> Predict(const Eigen::MatrixXd& x) const override {
    std::lock_guard<std::mutex> lock(mu_);
    if (command_.empty()) return absl::InvalidArgumentError("empty predictor command");
    const std::string request = external_internal::EncodeRequest(x, q_);
    DVI_ASSIGN_OR_RETURN(std::string response, RunChild(request));
    return external_internal::DecodeResponse(response, x.rows(), q_);
  }

 private:
  absl::StatusOr<std::string> RunChild(const std::string& request) const {
    int in_pipe[2], out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0) return absl::InternalError("pipe() failed");
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
      close(in_pipe[0]);
      close(in_pipe[1]);
      return absl::InternalError("pipe() failed");
    }
    std::vector<char*> argv;
    for (const auto& a : command_) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) return absl::InternalError("fork() failed");
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      execvp(argv[0], argv.data());
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    const int to_child = in_pipe[1];
    const int from_child = out_pipe[0];
    fcntl(to_child, F_SETFL, fcntl(to_child, F_GETFL) | O_NONBLOCK);
    signal(SIGPIPE, SIG_IGN);

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_seconds_);
    size_t written = 0;
    bool write_open = true;
    bool read_open = true;
    std::string response;
    char buf[65536];
    absl::Status status;
    while (read_open) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) {
        kill(pid, SIGKILL);
        status = absl::DeadlineExceededError(absl::StrCat(
            "external predictor '", command_[0], "' timed out after ",
            timeout_seconds_, " s"));
        break;
      }
      pollfd fds[2];
      int nfds = 0;
      fds[nfds++] = {from_child, POLLIN, 0};
      if (write_open) fds[nfds++] = {to_child, POLLOUT, 0};
      const int wait_ms = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
      if (poll(fds, nfds, wait_ms) < 0) {
        if (errno == EINTR) continue;
        status = absl::InternalError("poll() failed");
        kill(pid, SIGKILL);
        break;
      }
      if (write_open && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t k = write(to_child, request.data() + written, request.size() - written);
        if (k > 0) written += static_cast<size_t>(k);
        if (k < 0 && errno != EAGAIN) written = request.size();  // child closed stdin
        if (written == request.size()) {
          close(to_child);
          write_open = false;
        }
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        const ssize_t k = read(from_child, buf, sizeof(buf));
        if (k > 0) {
          response.append(buf, static_cast<size_t>(k));
        } else if (k == 0) {
          read_open = false;
        } else if (errno != EAGAIN && errno != EINTR) {
          read_open = false;
        }
      }
    }
    if (write_open) close(to_child);
    close(from_child);
    int wstatus = 0;
    waitpid(pid, &wstatus, 0);
    if (!status.ok()) return status;
    if (!WIFEXITED(wstatus) || WEXITSTATUS(wstatus) != 0) {
      return absl::UnavailableError(absl::StrCat(
          "external predictor '", command_[0], "' exited abnormally (status ",
          WIFEXITED(wstatus) ? WEXITSTATUS(wstatus) : -1, ")"));
    }
    return response;
  }

  std::vector<std::string> command_;
  int p_;
  int q_;
  double timeout_seconds_;
  mutable std::mutex mu_;
};

// Child side of the protocol: answers one request read from `in`.
inline absl::Status ServePrediction(const Predictor& model, std::istream& in,
                                    std::ostream& out) {
  std::string header;
  if (!std::getline(in, header)) return absl::InvalidArgumentError("no request header");
  long n = -1, p = -1, q = -1;
  if (std::sscanf(header.c_str(), "#predict n=%ld p=%ld q=%ld", &n, &p, &q) != 3 ||
      n < 0 || p < 1 || q < 1) {
    return absl::InvalidArgumentError(absl::StrCat("bad request header '", header, "'"));
  }
  if (p != model.num_features() || q != model.output_arity()) {
    return absl::InvalidArgumentError("request shape does not match the model");
  }
  Eigen::MatrixXd x(n, p);
  std::vector<double> row(p);
  std::string line;
  for (long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) return absl::InvalidArgumentError("truncated request");
    DVI_RETURN_IF_ERROR(external_internal::ParseRow(line, static_cast<int>(p), row.data()));
    for (long j = 0; j < p; ++j) x(i, j) = row[j];
  }
  DVI_ASSIGN_OR_RETURN(Eigen::MatrixXd y, model.Predict(x));
  std::string text;
  text.reserve(y.size() * 24);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      if (c > 0) text.push_back(',');
      external_internal::AppendDouble(&text, y(i, c));
    }
    text.push_back('\n');
  }
  text += "#end\n";
  out << text;
  out.flush();
  return absl::OkStatus();
}

}  // namespace dvi

#endif  // DVI_EXTERNAL_PREDICTOR_H_
