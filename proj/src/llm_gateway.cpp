#include "cotemb/llm_gateway.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "cotemb/digest.hpp"

namespace cotemb {

namespace {

std::string trim_outer(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string cache_key(const std::string& example_id, const std::string& fingerprint,
                      const std::string& backend_id) {
  return example_id + "\x1f" + fingerprint + "\x1f" + backend_id;
}

}  // namespace

StubBackend::StubBackend(std::string default_completion)
    : default_completion_(std::move(default_completion)) {}

std::unique_ptr<StubBackend> StubBackend::from_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GatewayError("cannot open stub fixture: " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in);
  auto stub = std::make_unique<StubBackend>(
      doc.value("default_completion", std::string("[NONE] no fixture matched.")));
  for (const auto& entry : doc.value("fixtures", nlohmann::json::array())) {
    stub->add_fixture(entry.at("match").get<std::string>(),
                      entry.at("completion").get<std::string>());
  }
  return stub;
}

void StubBackend::add_fixture(std::string prompt_substring, std::string completion) {
  std::lock_guard lock(mutex_);
  fixtures_.emplace_back(std::move(prompt_substring), std::move(completion));
}

std::string StubBackend::complete_once(const PromptText& prompt) {
  calls_.fetch_add(1);
  if (auth_fail_) throw AuthError("stub: bad credentials");
  if (fail_next_.fetch_sub(1) > 0) throw TransportError("stub: injected transport failure");
  fail_next_.store(0);
  std::lock_guard lock(mutex_);
  for (const auto& [needle, completion] : fixtures_) {
    if (prompt.text.find(needle) != std::string::npos) return completion;
  }
  return default_completion_;
}

std::string complete(CompletionBackend& backend, const PromptText& prompt,
                     const BackendConfig& config, const std::function<void(double)>& sleep_fn) {
  auto sleep = sleep_fn ? sleep_fn : [](double s) {
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };
  int attempts = 0;
  double delay = config.backoff_base_s;
  while (true) {
    ++attempts;
    try {
      return trim_outer(backend.complete_once(prompt));
    } catch (const AuthError&) {
      throw;
    } catch (const TransportError& e) {
      if (attempts >= config.max_attempts) {
        throw TransportError(std::string(e.what()) + " (gave up after " +
                             std::to_string(attempts) + " attempts)");
      }
      sleep(delay);
      delay *= 2;
    }
  }
}

CotCache::CotCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // fresh cache
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      CotRecord rec = deserialize(line);
      index_[cache_key(rec.example_id, rec.prompt_fingerprint, rec.backend_id)] = std::move(rec);
    } catch (const GatewayError&) {
      // torn or corrupted line; the entry will be regenerated
    }
  }
}

std::string CotCache::serialize(const CotRecord& record) {
  nlohmann::ordered_json j;
  j["example_id"] = record.example_id;
  j["prompt_fingerprint"] = record.prompt_fingerprint;
  j["backend_id"] = record.backend_id;
  j["model_name"] = record.model_name;
  j["raw_completion"] = record.raw_completion;
  j["created_at"] = record.created_at;
  std::string body = j.dump();
  j["checksum"] = fingerprint(body);
  return j.dump();
}

CotRecord CotCache::deserialize(const std::string& line) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(std::string("unparseable cache line: ") + e.what());
  }
  if (!j.contains("checksum")) throw GatewayError("cache line lacks checksum");
  std::string checksum = j["checksum"].get<std::string>();
  j.erase("checksum");
  if (fingerprint(j.dump()) != checksum) throw GatewayError("cache line checksum mismatch");
  CotRecord rec;
  rec.example_id = j.at("example_id").get<std::string>();
  rec.prompt_fingerprint = j.at("prompt_fingerprint").get<std::string>();
  rec.backend_id = j.at("backend_id").get<std::string>();
  rec.model_name = j.at("model_name").get<std::string>();
  rec.raw_completion = j.at("raw_completion").get<std::string>();
  rec.created_at = j.at("created_at").get<std::int64_t>();
  return rec;
}

std::optional<CotRecord> CotCache::lookup(const std::string& example_id,
                                          const std::string& prompt_fingerprint,
                                          const std::string& backend_id) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(cache_key(example_id, prompt_fingerprint, backend_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void CotCache::put(const CotRecord& record) {
  std::string line = serialize(record);
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw GatewayError("cannot append to cache: " + path_.string());
  out << line << "\n";
  out.flush();
  if (!out) throw GatewayError("cache write failed: " + path_.string());
  index_[cache_key(record.example_id, record.prompt_fingerprint, record.backend_id)] = record;
}

std::size_t CotCache::size() const {
  std::lock_guard lock(mutex_);
  return index_.size();
}

std::vector<CotRecord> CotCache::records() const {
  std::lock_guard lock(mutex_);
  std::vector<CotRecord> out;
  out.reserve(index_.size());
  for (const auto& [_, rec] : index_) out.push_back(rec);
  return out;
}

EnsureCotResult ensure_cot(std::span<const StanceExample> examples,
                           const LabelVocabulary& vocabulary,
                           const std::optional<CotExemplar>& exemplar,
                           const PromptTemplate& tmpl, const BackendConfig& config,
                           CompletionBackend& backend, CotCache& cache) {
  EnsureCotResult result;
  std::vector<PromptText> prompts;
  prompts.reserve(examples.size());
  for (const auto& ex : examples) prompts.push_back(tmpl.render(ex, vocabulary, exemplar));

  std::vector<std::optional<CotRecord>> slots(examples.size());
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (auto hit = cache.lookup(examples[i].example_id, prompts[i].fingerprint,
                                config.backend_id)) {
      slots[i] = std::move(hit);
      ++result.cache_hits;
    } else {
      misses.push_back(i);
    }
  }

  std::vector<std::optional<EnsureCotFailure>> errors(examples.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};
  auto worker = [&] {
    while (true) {
      std::size_t slot = next.fetch_add(1);
      if (slot >= misses.size()) return;
      std::size_t i = misses[slot];
      try {
        calls.fetch_add(1);
        std::string completion = complete(backend, prompts[i], config);
        CotRecord rec;
        rec.example_id = examples[i].example_id;
        rec.prompt_fingerprint = prompts[i].fingerprint;
        rec.backend_id = config.backend_id;
        rec.model_name = config.model_name;
        rec.raw_completion = std::move(completion);
        rec.created_at = std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
        cache.put(rec);
        slots[i] = std::move(rec);
      } catch (const std::exception& e) {
        errors[i] = EnsureCotFailure{examples[i].example_id, e.what()};
      }
    }
  };

  std::size_t workers = std::min<std::size_t>(std::max(1, config.max_in_flight), misses.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  result.backend_calls = calls.load();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (slots[i]) {
      result.records.push_back(std::move(*slots[i]));
    } else if (errors[i]) {
      result.failures.push_back(std::move(*errors[i]));
    }
  }
  return result;
}

}  // namespace cotemb
