#pragma once

#include "common.hpp"

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace aware {

// A retrieved context plus one query; the unit consumed by a backbone.
struct Prompt {
  Matrix context;                              // B x m
  std::vector<double> context_labels;          // B
  std::vector<std::size_t> context_row_ids;    // B, may be empty for synthetic prompts
  Vector query;                                // m
  std::optional<std::size_t> query_row_id;
  std::optional<double> query_label;           // training prompts only

  std::size_t size() const { return static_cast<std::size_t>(context.rows()); }
  void validate() const;
};

struct BackboneOutput {
  std::vector<double> class_probs;  // classification
  double value = 0.0;               // regression
};

struct VoteConfig {
  std::optional<double> tau;  // unset: mean context distance of each prompt
  double epsilon = 1e-6;
  int n_classes = 2;          // 0 selects the regression vote
};

// Squared euclidean distance of the query to each context row.
Vector prompt_distances(const Prompt& prompt);

// Temperature actually used for a prompt with the given distances.
double vote_temperature(const VoteConfig& config, const Vector& distances);

BackboneOutput knn_vote_predict(const Prompt& prompt, const VoteConfig& config);

// Any in-context predictor. Implementations must be pure functions of the
// prompt and their construction-time configuration.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual std::string name() const = 0;
  virtual BackboneOutput predict(const Prompt& prompt) const = 0;
};

class KnnVoteBackbone final : public Backbone {
 public:
  explicit KnnVoteBackbone(VoteConfig config) : config_(config) {}
  std::string name() const override { return "knn_vote"; }
  BackboneOutput predict(const Prompt& prompt) const override { return knn_vote_predict(prompt, config_); }
  const VoteConfig& config() const { return config_; }

 private:
  VoteConfig config_;
};

// Talks newline-delimited JSON to a child process over its standard streams:
// request {"context": [[...]], "labels": [...], "query": [...]}, response
// {"probs": [...]}. The child is started lazily and reused across calls.
class SubprocessBackbone final : public Backbone {
 public:
  SubprocessBackbone(std::string command, int n_classes,
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));
  ~SubprocessBackbone() override;
  SubprocessBackbone(const SubprocessBackbone&) = delete;
  SubprocessBackbone& operator=(const SubprocessBackbone&) = delete;

  std::string name() const override { return "subprocess:" + command_; }
  BackboneOutput predict(const Prompt& prompt) const override;

  static std::string encode_request(const Prompt& prompt);
  static std::vector<double> decode_response(const std::string& line, int n_classes);

 private:
  void start() const;
  void stop() const;

  std::string command_;
  int n_classes_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  mutable int pid_ = -1;
  mutable int to_child_ = -1;
  mutable int from_child_ = -1;
  mutable std::string buffer_;
};

// "knn_vote" or "subprocess:<shell command>".
std::unique_ptr<Backbone> make_backbone(const std::string& spec, const VoteConfig& config);
std::vector<std::string> builtin_backbones();

}  // namespace aware
