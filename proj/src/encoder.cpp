#include "cotemb/encoder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "cotemb/digest.hpp"

namespace cotemb {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '#' || c == '@' || c == '\'') {
      current += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::vector<int> hash_tokens(const std::vector<std::string>& tokens, int buckets) {
  std::vector<int> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) {
    rows.push_back(static_cast<int>(fnv1a64(t) % static_cast<std::uint64_t>(buckets)));
  }
  return rows;
}

StanceClassifier::StanceClassifier(const std::string& encoder_name, int buckets, int dim,
                                   std::uint64_t head_seed) {
  if (buckets <= 0 || dim <= 0) throw std::invalid_argument("buckets and dim must be positive");
  // Checkpoint identity: same name, same embedding table.
  std::mt19937_64 emb_rng(fnv1a64(encoder_name));
  std::normal_distribution<double> emb_dist(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  embeddings_.resize(buckets, dim);
  for (Eigen::Index i = 0; i < embeddings_.rows(); ++i) {
    for (Eigen::Index j = 0; j < embeddings_.cols(); ++j) {
      embeddings_(i, j) = emb_dist(emb_rng);
    }
  }
  std::mt19937_64 head_rng(head_seed);
  std::normal_distribution<double> head_dist(0.0, 0.02);
  head_weight_.resize(3, 2 * dim);
  for (Eigen::Index i = 0; i < head_weight_.rows(); ++i) {
    for (Eigen::Index j = 0; j < head_weight_.cols(); ++j) {
      head_weight_(i, j) = head_dist(head_rng);
    }
  }
  head_bias_.setZero();
  revision_ = encoder_name + "@" +
              fingerprint(encoder_name + ":" + std::to_string(buckets) + "x" +
                          std::to_string(dim))
                  .substr(0, 12);
}

Eigen::VectorXd StanceClassifier::pool(const std::vector<int>& rows) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
  if (rows.empty()) return out;
  for (int r : rows) out += embeddings_.row(r).transpose();
  return out / static_cast<double>(rows.size());
}

Eigen::Vector3d softmax(const Eigen::Vector3d& logits) {
  Eigen::Vector3d shifted = logits.array() - logits.maxCoeff();
  Eigen::Vector3d e = shifted.array().exp();
  return e / e.sum();
}

Eigen::Vector3d StanceClassifier::predict_proba(const std::vector<int>& rows_a,
                                                const std::vector<int>& rows_b) const {
  Eigen::VectorXd x(2 * dim());
  x << pool(rows_a), pool(rows_b);
  return softmax(head_weight_ * x + head_bias_);
}

StanceLabel StanceClassifier::predict(const std::vector<int>& rows_a,
                                      const std::vector<int>& rows_b) const {
  Eigen::Vector3d p = predict_proba(rows_a, rows_b);
  StanceLabel best = kLabelOrder[0];
  double best_score = p(0);
  for (int k = 1; k < 3; ++k) {
    if (p(k) > best_score) {  // strict: earlier labels win ties
      best_score = p(k);
      best = kLabelOrder[k];
    }
  }
  return best;
}

namespace {
constexpr char kMagic[8] = {'c', 'o', 't', 'e', 'm', 'b', 'm', '1'};

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  std::int64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || rows <= 0 || cols <= 0) throw std::runtime_error("corrupt model file");
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw std::runtime_error("corrupt model file");
  return m;
}
}  // namespace

void StanceClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model: " + path.string());
  out.write(kMagic, sizeof kMagic);
  std::uint32_t rev_len = static_cast<std::uint32_t>(revision_.size());
  out.write(reinterpret_cast<const char*>(&rev_len), sizeof rev_len);
  out.write(revision_.data(), rev_len);
  write_matrix(out, embeddings_);
  write_matrix(out, head_weight_);
  Eigen::MatrixXd bias = head_bias_;
  write_matrix(out, bias);
  if (!out) throw std::runtime_error("model write failed: " + path.string());
}

StanceClassifier StanceClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model: " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("not a model file: " + path.string());
  }
  std::uint32_t rev_len = 0;
  in.read(reinterpret_cast<char*>(&rev_len), sizeof rev_len);
  std::string revision(rev_len, '\0');
  in.read(revision.data(), rev_len);
  StanceClassifier model;
  model.revision_ = revision;
  model.embeddings_ = read_matrix(in);
  model.head_weight_ = read_matrix(in);
  Eigen::MatrixXd bias = read_matrix(in);
  if (bias.rows() != 3 || bias.cols() != 1) throw std::runtime_error("corrupt model bias");
  model.head_bias_ = bias.col(0);
  return model;
}

AdamW::AdamW(Eigen::Index rows, Eigen::Index cols, double weight_decay)
    : m_(Eigen::MatrixXd::Zero(rows, cols)),
      v_(Eigen::MatrixXd::Zero(rows, cols)),
      weight_decay_(weight_decay) {}

void AdamW::step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad, double lr,
                 bool decay) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++t_;
  m_ = b1 * m_ + (1.0 - b1) * grad;
  v_ = b2 * v_ + (1.0 - b2) * grad.cwiseProduct(grad);
  double mc = 1.0 - std::pow(b1, static_cast<double>(t_));
  double vc = 1.0 - std::pow(b2, static_cast<double>(t_));
  Eigen::MatrixXd update =
      (m_ / mc).cwiseQuotient(((v_ / vc).cwiseSqrt().array() + eps).matrix());
  if (decay && weight_decay_ > 0) update += weight_decay_ * param;
  param -= lr * update;
}

}  // namespace cotemb
