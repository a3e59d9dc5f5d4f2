#include "backbone.hpp"

#include <json.hpp>

#include <cmath>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace aware {

void Prompt::validate() const {
  if (context.rows() < 1) fail(ErrorKind::invalid_argument, "prompt context is empty");
  if (context_labels.size() != size()) fail(ErrorKind::invalid_argument, "prompt labels do not match context rows");
  if (!context_row_ids.empty() && context_row_ids.size() != size()) {
    fail(ErrorKind::invalid_argument, "prompt row ids do not match context rows");
  }
  if (query.size() != context.cols()) fail(ErrorKind::data, "query dimension does not match context");
  if (query_row_id) {
    for (std::size_t id : context_row_ids) {
      if (id == *query_row_id) fail(ErrorKind::internal, "query row leaked into its own context");
    }
  }
}

Vector prompt_distances(const Prompt& prompt) {
  return (prompt.context.rowwise() - prompt.query.transpose()).rowwise().squaredNorm();
}

double vote_temperature(const VoteConfig& config, const Vector& distances) {
  if (config.tau) {
    require(*config.tau > 0.0, "vote temperature must be positive");
    return *config.tau;
  }
  const double mean = distances.mean();
  return std::isfinite(mean) && mean > 0.0 ? mean : 1.0;
}

BackboneOutput knn_vote_predict(const Prompt& prompt, const VoteConfig& config) {
  prompt.validate();
  require(config.epsilon >= 0.0, "epsilon must be non-negative");
  const Vector d = prompt_distances(prompt);
  const double tau = vote_temperature(config, d);
  const Vector s = -d / tau;
  const Vector w = (s.array() - s.maxCoeff()).exp();
  BackboneOutput out;
  if (config.n_classes == 0) {
    double num = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) num += w(j) * prompt.context_labels[static_cast<std::size_t>(j)];
    out.value = num / w.sum();
    return out;
  }
  const int C = config.n_classes;
  std::vector<double> mass(static_cast<std::size_t>(C), 0.0);
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double y = prompt.context_labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= C) fail(ErrorKind::data, "context label outside the class range");
    mass[static_cast<std::size_t>(y)] += w(j);
  }
  const double denom = w.sum() + C * config.epsilon;
  out.class_probs.resize(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) out.class_probs[static_cast<std::size_t>(c)] = (mass[static_cast<std::size_t>(c)] + config.epsilon) / denom;
  return out;
}

SubprocessBackbone::SubprocessBackbone(std::string command, int n_classes, std::chrono::milliseconds timeout)
    : command_(std::move(command)), n_classes_(n_classes), timeout_(timeout) {
  require(!command_.empty(), "subprocess backbone needs a command");
  require(n_classes_ >= 2, "subprocess backbone supports classification only");
}

SubprocessBackbone::~SubprocessBackbone() { stop(); }

void SubprocessBackbone::start() const {
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) fail(ErrorKind::backbone, "socketpair failed");
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    fail(ErrorKind::backbone, "fork failed");
  }
  if (pid == 0) {
    close(fds[0]);
    dup2(fds[1], STDIN_FILENO);
    dup2(fds[1], STDOUT_FILENO);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fds[1]);
  pid_ = pid;
  to_child_ = fds[0];
  from_child_ = fds[0];
  buffer_.clear();
}

void SubprocessBackbone::stop() const {
  if (pid_ < 0) return;
  shutdown(to_child_, SHUT_WR);
  close(to_child_);
  int status = 0;
  for (int i = 0; i < 50; ++i) {
    if (waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      break;
    }
    usleep(10000);
  }
  if (pid_ >= 0) {
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
  pid_ = -1;
  to_child_ = from_child_ = -1;
}

std::string SubprocessBackbone::encode_request(const Prompt& prompt) {
  nlohmann::json j;
  auto context = nlohmann::json::array();
  for (Eigen::Index i = 0; i < prompt.context.rows(); ++i) {
    std::vector<double> row(prompt.context.row(i).data(), prompt.context.row(i).data() + prompt.context.cols());
    context.push_back(row);
  }
  j["context"] = std::move(context);
  j["labels"] = prompt.context_labels;
  j["query"] = std::vector<double>(prompt.query.data(), prompt.query.data() + prompt.query.size());
  return j.dump();
}

std::vector<double> SubprocessBackbone::decode_response(const std::string& line, int n_classes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::backbone, "backbone response is not JSON: " + line.substr(0, 80));
  }
  if (!j.is_object() || !j.contains("probs") || !j["probs"].is_array()) {
    fail(ErrorKind::backbone, "backbone response lacks a 'probs' array");
  }
  std::vector<double> probs;
  for (const auto& v : j["probs"]) {
    if (!v.is_number()) fail(ErrorKind::backbone, "backbone probabilities must be numbers");
    probs.push_back(v.get<double>());
  }
  if (static_cast<int>(probs.size()) != n_classes) {
    fail(ErrorKind::backbone, "backbone returned " + std::to_string(probs.size()) + " probabilities, expected " +
                                  std::to_string(n_classes));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) fail(ErrorKind::backbone, "backbone probability is negative or non-finite");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) fail(ErrorKind::backbone, "backbone probabilities do not sum to 1");
  return probs;
}

BackboneOutput SubprocessBackbone::predict(const Prompt& prompt) const {
  prompt.validate();
  std::lock_guard<std::mutex> lock(mutex_);
  if (pid_ < 0) start();
  const std::string request = encode_request(prompt) + "\n";
  std::size_t sent = 0;
  while (sent < request.size()) {
    const ssize_t n = send(to_child_, request.data() + sent, request.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      stop();
      fail(ErrorKind::backbone, "backbone process closed its input");
    }
    sent += static_cast<std::size_t>(n);
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::size_t newline;
  while ((newline = buffer_.find('\n')) == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      stop();
      fail(ErrorKind::backbone, "backbone timed out");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ready > 0 ? read(from_child_, chunk, sizeof(chunk)) : -1;
    if (n <= 0) {
      stop();
      fail(ErrorKind::backbone, "backbone process exited without a response");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  const std::string line = buffer_.substr(0, newline);
  buffer_.erase(0, newline + 1);
  BackboneOutput out;
  out.class_probs = decode_response(line, n_classes_);
  return out;
}

std::unique_ptr<Backbone> make_backbone(const std::string& spec, const VoteConfig& config) {
  if (spec == "knn_vote") return std::make_unique<KnnVoteBackbone>(config);
  const std::string prefix = "subprocess:";
  if (spec.rfind(prefix, 0) == 0) return std::make_unique<SubprocessBackbone>(spec.substr(prefix.size()), config.n_classes);
  fail(ErrorKind::config, "unknown backbone '" + spec + "' (expected knn_vote or subprocess:<command>)");
}

std::vector<std::string> builtin_backbones() { return {"knn_vote"}; }

}  // namespace aware
