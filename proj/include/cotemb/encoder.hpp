#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cotemb/corpus.hpp"

namespace cotemb {

/// Lowercased word tokens; #hashtags, @mentions and apostrophes survive.
std::vector<std::string> tokenize(std::string_view text);

/// Bucket ids for a token sequence (feature hashing).
std::vector<int> hash_tokens(const std::vector<std::string>& tokens, int buckets);

/// A compact text-pair classifier: hashed token embeddings are mean-pooled
/// per segment, the two pooled vectors concatenated and fed to a linear
/// 3-way head. Embeddings are deterministically derived from the checkpoint
/// name, so a given encoder_name always denotes the same starting point;
/// fine-tuning updates embeddings and head jointly.
class StanceClassifier {
 public:
  StanceClassifier(const std::string& encoder_name, int buckets, int dim, std::uint64_t head_seed);

  int buckets() const { return static_cast<int>(embeddings_.rows()); }
  int dim() const { return static_cast<int>(embeddings_.cols()); }
  /// Identifies the resolved starting point (name + init digest).
  const std::string& revision() const { return revision_; }

  /// Class probabilities for one (segment_a, segment_b) token-bucket pair.
  Eigen::Vector3d predict_proba(const std::vector<int>& rows_a,
                                const std::vector<int>& rows_b) const;
  /// Argmax of predict_proba; ties break toward the fixed label order.
  StanceLabel predict(const std::vector<int>& rows_a, const std::vector<int>& rows_b) const;

  void save(const std::filesystem::path& path) const;
  static StanceClassifier load(const std::filesystem::path& path);

  // Parameter access for the trainer.
  Eigen::MatrixXd& embeddings() { return embeddings_; }
  Eigen::MatrixXd& head_weight() { return head_weight_; }
  Eigen::Vector3d& head_bias() { return head_bias_; }
  const Eigen::MatrixXd& embeddings() const { return embeddings_; }
  const Eigen::MatrixXd& head_weight() const { return head_weight_; }
  const Eigen::Vector3d& head_bias() const { return head_bias_; }

  Eigen::VectorXd pool(const std::vector<int>& rows) const;

 private:
  StanceClassifier() = default;
  Eigen::MatrixXd embeddings_;   // buckets x dim
  Eigen::MatrixXd head_weight_;  // 3 x 2*dim
  Eigen::Vector3d head_bias_;
  std::string revision_;
};

Eigen::Vector3d softmax(const Eigen::Vector3d& logits);

/// Decoupled-weight-decay Adam over one parameter matrix.
class AdamW {
 public:
  AdamW(Eigen::Index rows, Eigen::Index cols, double weight_decay);
  void step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad, double lr,
            bool decay = true);

 private:
  Eigen::MatrixXd m_, v_;
  double weight_decay_;
  long t_ = 0;
};

}  // namespace cotemb
