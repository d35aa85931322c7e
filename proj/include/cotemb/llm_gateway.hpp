#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotemb/corpus.hpp"
#include "cotemb/cot_parser.hpp"
#include "cotemb/prompting.hpp"

namespace cotemb {

struct BackendConfig {
  std::string backend_id;
  std::string model_name;
  double temperature = 0.0;  // deterministic by default
  int max_tokens = 512;
  double request_timeout_s = 60.0;
  int max_attempts = 3;           // total tries for transient failures
  double backoff_base_s = 1.0;    // doubles per retry
  int max_in_flight = 4;
  std::string credentials_env;    // env var holding the API key, if any
};

struct CotRecord {
  std::string example_id;
  std::string prompt_fingerprint;
  std::string backend_id;
  std::string model_name;
  std::string raw_completion;
  std::int64_t created_at = 0;  // unix seconds
  std::optional<ParseResult> parse;
};

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class AuthError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// A chat-completion backend. Implementations raise TransportError for
/// retryable faults and AuthError for credential problems (never retried).
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete_once(const PromptText& prompt) = 0;
};

/// Fixture-driven backend so the whole pipeline runs with zero network
/// access. Completions are chosen by substring match against the prompt;
/// unmatched prompts get the default completion. Supports scripted failures.
class StubBackend : public CompletionBackend {
 public:
  explicit StubBackend(std::string default_completion = "[NONE] no fixture matched.");

  static std::unique_ptr<StubBackend> from_fixture(const std::filesystem::path& path);

  void add_fixture(std::string prompt_substring, std::string completion);
  /// The next `n` calls throw TransportError before any fixture lookup.
  void fail_next(int n) { fail_next_ = n; }
  void fail_with_auth_error(bool v) { auth_fail_ = v; }

  std::string complete_once(const PromptText& prompt) override;
  int calls() const { return calls_.load(); }

 private:
  std::vector<std::pair<std::string, std::string>> fixtures_;
  std::string default_completion_;
  std::atomic<int> calls_{0};
  std::atomic<int> fail_next_{0};
  bool auth_fail_ = false;
  std::mutex mutex_;
};

/// Retry wrapper: transient failures back off exponentially up to the
/// configured attempt cap; auth failures surface immediately. The returned
/// text is the backend's completion trimmed of outer whitespace only.
std::string complete(CompletionBackend& backend, const PromptText& prompt,
                     const BackendConfig& config,
                     const std::function<void(double)>& sleep_fn = {});

/// Append-only record log with an in-memory index keyed by
/// (example_id, prompt_fingerprint, backend_id). One serialized record per
/// line with a terminal checksum field; lines failing the checksum (a torn
/// final write) are dropped at open.
class CotCache {
 public:
  explicit CotCache(std::filesystem::path path);

  std::optional<CotRecord> lookup(const std::string& example_id,
                                  const std::string& prompt_fingerprint,
                                  const std::string& backend_id) const;
  void put(const CotRecord& record);
  std::size_t size() const;
  std::vector<CotRecord> records() const;

  static std::string serialize(const CotRecord& record);
  static CotRecord deserialize(const std::string& line);

 private:
  std::filesystem::path path_;
  std::map<std::string, CotRecord> index_;
  mutable std::mutex mutex_;
};

struct EnsureCotFailure {
  std::string example_id;
  std::string message;
};

struct EnsureCotResult {
  std::vector<CotRecord> records;  // one per input example, input order
  std::vector<EnsureCotFailure> failures;
  std::size_t cache_hits = 0;
  std::size_t backend_calls = 0;
  bool ok() const { return failures.empty(); }
};

/// Returns one CotRecord per example, serving from the cache where the key
/// exists and calling the backend otherwise. Failed examples are reported in
/// the result manifest; their slots are omitted from `records` so a rerun
/// resumes from the cache. Requests fan out over at most
/// `config.max_in_flight` worker threads.
EnsureCotResult ensure_cot(std::span<const StanceExample> examples,
                           const LabelVocabulary& vocabulary,
                           const std::optional<CotExemplar>& exemplar,
                           const PromptTemplate& tmpl, const BackendConfig& config,
                           CompletionBackend& backend, CotCache& cache);

}  // namespace cotemb
