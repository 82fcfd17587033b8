#include "toktrack/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "toktrack/dump.hpp"
#include "toktrack/hash.hpp"
#include "toktrack/tokenizer.hpp"

namespace toktrack {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kManifestName = "run_manifest.json";
constexpr const char* kReportName = "run_report.json";

std::string marker_name(std::uint64_t batch_id) {
  return "batch-" + std::to_string(batch_id) + ".done";
}

std::string derive_dump_date(const fs::path& dump_path) {
  const std::string name = dump_path.filename().string();
  std::size_t run = 0;
  for (std::size_t i = 0; i <= name.size(); ++i) {
    if (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i]))) {
      if (++run == 8) return name.substr(i - 7, 8);
    } else {
      run = 0;
    }
  }
  return "00000000";
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return j;
}

// Results of tracking one page, ready to become dataset rows.
struct PageOutput {
  PageId page_id = 0;
  std::vector<ContentRow> current;
  std::vector<ContentRow> deleted;
  std::vector<RevisionRow> revisions;
  std::vector<RevisionHashRow> hashes;
  std::uint64_t revisions_processed = 0;
  std::uint64_t revisions_skipped = 0;
  std::uint64_t tokens_created = 0;
};

PageOutput process_page(const PageRecord& page) {
  PageOutput out;
  out.page_id = page.page_id;
  ArticleTracker tracker(page.page_id);
  for (const auto& rev : page.revisions) {
    if (!rev.text) {
      ++out.revisions_skipped;
      continue;
    }
    tracker.process_revision(rev.rev_id, rev.timestamp, *rev.text);
    out.revisions.push_back({page.page_id, rev.rev_id, rev.timestamp, rev.editor});
    out.hashes.push_back({page.page_id, rev.rev_id, rev.sha1});
    ++out.revisions_processed;
  }
  auto partition = tracker.finalize();
  const auto& tokens = tracker.tokens();
  out.tokens_created = tokens.size();
  auto to_row = [&](TokenId id) {
    const TokenHistory& t = tokens[id - 1];
    return ContentRow{page.page_id, t.last_rev_id, id, t.str, t.origin_rev_id, t.out, t.in};
  };
  out.current.reserve(partition.current.size());
  for (TokenId id : partition.current) out.current.push_back(to_row(id));
  out.deleted.reserve(partition.deleted.size());
  for (TokenId id : partition.deleted) out.deleted.push_back(to_row(id));
  std::sort(out.revisions.begin(), out.revisions.end(),
            [](const RevisionRow& a, const RevisionRow& b) { return a.rev_id < b.rev_id; });
  std::sort(out.hashes.begin(), out.hashes.end(),
            [](const RevisionHashRow& a, const RevisionHashRow& b) { return a.rev_id < b.rev_id; });
  return out;
}

// Writes the four files of one batch plus its completion marker.
class BatchSink {
 public:
  BatchSink(fs::path dir, std::string dump_date, bool compress)
      : dir_(std::move(dir)), dump_date_(std::move(dump_date)), compress_(compress) {}

  void write_batch(std::uint64_t batch_id, std::vector<PageOutput> results) {
    std::sort(results.begin(), results.end(),
              [](const PageOutput& a, const PageOutput& b) { return a.page_id < b.page_id; });
    PageId first = results.empty() ? 0 : results.front().page_id;
    PageId last = results.empty() ? 0 : results.back().page_id;

    std::vector<ContentRow> current;
    std::vector<ContentRow> deleted;
    std::vector<RevisionRow> revisions;
    std::vector<RevisionHashRow> hashes;
    std::uint64_t revisions_processed = 0, revisions_skipped = 0, tokens_created = 0;
    for (auto& r : results) {
      std::move(r.current.begin(), r.current.end(), std::back_inserter(current));
      std::move(r.deleted.begin(), r.deleted.end(), std::back_inserter(deleted));
      std::move(r.revisions.begin(), r.revisions.end(), std::back_inserter(revisions));
      std::move(r.hashes.begin(), r.hashes.end(), std::back_inserter(hashes));
      revisions_processed += r.revisions_processed;
      revisions_skipped += r.revisions_skipped;
      tokens_created += r.tokens_created;
    }

    json marker;
    marker["batch_id"] = batch_id;
    marker["first_page_id"] = first;
    marker["last_page_id"] = last;
    marker["pages"] = results.size();
    marker["revisions_processed"] = revisions_processed;
    marker["revisions_skipped_missing_text"] = revisions_skipped;
    marker["tokens_created"] = tokens_created;
    json files = json::array();
    for (OutputType type : {OutputType::current_content, OutputType::deleted_content,
                            OutputType::revisions, OutputType::revision_hashes}) {
      BatchDescriptor desc{dump_date_, type, batch_id, first, last};
      switch (type) {
        case OutputType::current_content:
          write_content_batch(current, desc, dir_, compress_);
          break;
        case OutputType::deleted_content:
          write_content_batch(deleted, desc, dir_, compress_);
          break;
        case OutputType::revisions:
          write_revision_batch(revisions, desc, dir_, compress_);
          break;
        case OutputType::revision_hashes:
          write_hash_batch(hashes, desc, dir_, compress_);
          break;
      }
      files.push_back(batch_file_name(desc, compress_));
    }
    marker["files"] = files;
    write_text_atomic(dir_ / marker_name(batch_id), marker.dump(2) + "\n");
  }

  bool marker_exists(std::uint64_t batch_id) const {
    return fs::exists(dir_ / marker_name(batch_id));
  }

 private:
  fs::path dir_;
  std::string dump_date_;
  bool compress_;
};

// Collects per-page results until a batch is complete, then hands the whole
// batch to the sink. Completion needs both every deliver() and the reader's
// close_batch() announcing the expected count.
class BatchCollector {
 public:
  explicit BatchCollector(BatchSink& sink) : sink_(sink) {}

  void deliver(std::uint64_t batch_id, PageOutput out) {
    std::unique_lock<std::mutex> lock(mutex_);
    Pending& p = pending_[batch_id];
    p.results.push_back(std::move(out));
    maybe_finish(batch_id, lock);
  }

  void close_batch(std::uint64_t batch_id, std::uint64_t expected) {
    std::unique_lock<std::mutex> lock(mutex_);
    Pending& p = pending_[batch_id];
    p.expected = expected;
    p.closed = true;
    maybe_finish(batch_id, lock);
  }

  bool empty() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return pending_.empty();
  }

 private:
  struct Pending {
    std::vector<PageOutput> results;
    std::uint64_t expected = 0;
    bool closed = false;
  };

  void maybe_finish(std::uint64_t batch_id, std::unique_lock<std::mutex>& lock) {
    auto it = pending_.find(batch_id);
    if (it == pending_.end()) return;
    Pending& p = it->second;
    if (!p.closed || p.results.size() != p.expected) return;
    std::vector<PageOutput> results = std::move(p.results);
    pending_.erase(it);
    lock.unlock();
    sink_.write_batch(batch_id, std::move(results));
    lock.lock();
  }

  BatchSink& sink_;
  mutable std::mutex mutex_;
  std::map<std::uint64_t, Pending> pending_;
};

struct PageTask {
  std::uint64_t batch_id = 0;
  PageRecord page;
};

// Single-producer multi-consumer queue with a capacity bound so the reader
// cannot race ahead of the workers; abort() unblocks everything after a
// worker failure.
class TaskQueue {
 public:
  explicit TaskQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(PageTask task) {
    std::unique_lock<std::mutex> lock(mutex_);
    not_full_.wait(lock, [&] { return aborted_ || queue_.size() < capacity_; });
    if (aborted_) return false;
    queue_.push_back(std::move(task));
    not_empty_.notify_one();
    return true;
  }

  std::optional<PageTask> pop() {
    std::unique_lock<std::mutex> lock(mutex_);
    not_empty_.wait(lock, [&] { return aborted_ || closed_ || !queue_.empty(); });
    if (aborted_ || queue_.empty()) return std::nullopt;
    PageTask task = std::move(queue_.front());
    queue_.pop_front();
    not_full_.notify_one();
    return task;
  }

  void close() {
    std::lock_guard<std::mutex> lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
  }

  void abort() {
    std::lock_guard<std::mutex> lock(mutex_);
    aborted_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<PageTask> queue_;
  bool closed_ = false;
  bool aborted_ = false;
};

void check_manifest(const fs::path& dir, const std::string& dump_file,
                    std::uint64_t batch_size, const std::string& dump_date, bool compress) {
  fs::path path = dir / kManifestName;
  if (fs::exists(path)) {
    json j = load_json_file(path);
    auto mismatch = [&](const char* field, const std::string& want, const std::string& have) {
      throw std::runtime_error("output directory was started with a different configuration: " +
                               std::string(field) + " was " + have + ", now " + want +
                               " (" + path.string() + ")");
    };
    if (j.value("dump_file", "") != dump_file)
      mismatch("dump_file", dump_file, j.value("dump_file", ""));
    if (j.value("batch_size", std::uint64_t{0}) != batch_size)
      mismatch("batch_size", std::to_string(batch_size),
               std::to_string(j.value("batch_size", std::uint64_t{0})));
    if (j.value("dump_date", "") != dump_date)
      mismatch("dump_date", dump_date, j.value("dump_date", ""));
    if (j.value("compress", false) != compress)
      mismatch("compress", compress ? "true" : "false", j.value("compress", false) ? "true" : "false");
    return;
  }
  json j;
  j["dump_file"] = dump_file;
  j["batch_size"] = batch_size;
  j["dump_date"] = dump_date;
  j["compress"] = compress;
  write_text_atomic(path, j.dump(2) + "\n");
}

std::string resolve_dump_date(const RunConfig& config) {
  std::string date = config.dump_date.empty() ? derive_dump_date(config.dump_path)
                                              : config.dump_date;
  if (date.size() != 8 ||
      !std::all_of(date.begin(), date.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw std::invalid_argument("dump date must be 8 digits, got \"" + date + "\"");
  return date;
}

// Paths of one batch's files, keyed by output type.
struct BatchFiles {
  std::optional<fs::path> paths[4];
  PageId first_page_id = 0;
  PageId last_page_id = 0;

  const fs::path& path_for(OutputType type) const {
    const auto& p = paths[static_cast<int>(type)];
    if (!p) throw IntegrityError("internal: missing batch file");
    return *p;
  }
};

std::map<std::uint64_t, BatchFiles> scan_batches(const fs::path& dir, const RunReport& report,
                                                 bool need_hashes) {
  std::map<std::uint64_t, BatchFiles> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    BatchDescriptor desc;
    try {
      desc = parse_batch_file_name(entry.path().filename().string());
    } catch (const FormatError&) {
      continue;
    }
    if (desc.dump_date != report.dump_date) continue;
    BatchFiles& files = found[desc.batch_id];
    files.paths[static_cast<int>(desc.output_type)] = entry.path();
    files.first_page_id = desc.first_page_id;
    files.last_page_id = desc.last_page_id;
  }
  for (std::uint64_t id = 1; id <= report.batches; ++id) {
    auto it = found.find(id);
    if (it == found.end())
      throw IntegrityError("batch " + std::to_string(id) + ": no files found in " + dir.string());
    if (!fs::exists(dir / marker_name(id)))
      throw IntegrityError("batch " + std::to_string(id) + ": completion marker missing");
    std::vector<OutputType> need = {OutputType::current_content, OutputType::deleted_content,
                                    OutputType::revisions};
    if (need_hashes) need.push_back(OutputType::revision_hashes);
    for (OutputType type : need) {
      if (!it->second.paths[static_cast<int>(type)])
        throw IntegrityError("batch " + std::to_string(id) + ": missing " +
                             std::string(output_type_name(type)) + " file");
    }
  }
  return found;
}

// Rows of one batch regrouped per page. Row vectors stay in file order,
// which the writers guarantee is sorted.
struct BatchData {
  std::map<PageId, std::vector<ContentRow>> current;
  std::map<PageId, std::vector<ContentRow>> deleted;
  std::map<PageId, std::vector<RevisionRow>> revisions;
  std::map<PageId, std::vector<RevisionHashRow>> hashes;
};

BatchData load_batch(const BatchFiles& files, bool need_hashes) {
  BatchData data;
  for (auto& row : read_content_batch(files.path_for(OutputType::current_content)).rows)
    data.current[row.page_id].push_back(std::move(row));
  for (auto& row : read_content_batch(files.path_for(OutputType::deleted_content)).rows)
    data.deleted[row.page_id].push_back(std::move(row));
  for (auto& row : read_revision_batch(files.path_for(OutputType::revisions)).rows)
    data.revisions[row.page_id].push_back(std::move(row));
  if (need_hashes) {
    for (auto& row : read_hash_batch(files.path_for(OutputType::revision_hashes)).rows)
      data.hashes[row.page_id].push_back(std::move(row));
  }
  return data;
}

// Deterministic per-pair coin flip for validation sampling.
bool sampled(PageId page_id, RevId rev_id, double fraction) {
  if (fraction >= 1.0) return true;
  if (fraction <= 0.0) return false;
  unsigned char bytes[16];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(page_id >> (8 * i));
  for (int i = 0; i < 8; ++i) bytes[8 + i] = static_cast<unsigned char>(rev_id >> (8 * i));
  std::uint64_t h = fnv1a(std::string_view(reinterpret_cast<const char*>(bytes), sizeof bytes));
  return static_cast<double>(h >> 11) / static_cast<double>(1ull << 53) < fraction;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

class CsvTable {
 public:
  CsvTable(const fs::path& path, std::initializer_list<const char*> header) : path_(path) {
    fs::path tmp = path;
    tmp += ".tmp";
    out_.open(tmp, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write " + tmp.string());
    bool first = true;
    for (const char* h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  void row(std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
  }

  void finish() {
    if (!out_.flush()) throw std::runtime_error("write failed for " + path_.string());
    out_.close();
    fs::path tmp = path_;
    tmp += ".tmp";
    fs::rename(tmp, path_);
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

}  // namespace

RunReport load_run_report(const fs::path& output_dir) {
  fs::path path = output_dir / kReportName;
  if (!fs::exists(path))
    throw std::runtime_error("no " + std::string(kReportName) + " in " + output_dir.string() +
                             "; processing did not complete there");
  json j = load_json_file(path);
  RunReport report;
  report.dump_date = j.value("dump_date", "");
  report.batch_size = j.value("batch_size", std::uint64_t{0});
  report.compress = j.value("compress", false);
  report.batches = j.value("batches", std::uint64_t{0});
  report.pages_seen = j.value("pages_seen", std::uint64_t{0});
  report.pages_processed = j.value("pages_processed", std::uint64_t{0});
  if (j.contains("pages_skipped"))
    for (auto& [key, value] : j["pages_skipped"].items())
      report.pages_skipped[key] = value.get<std::uint64_t>();
  report.revisions_seen = j.value("revisions_seen", std::uint64_t{0});
  report.revisions_processed = j.value("revisions_processed", std::uint64_t{0});
  report.revisions_skipped_missing_text =
      j.value("revisions_skipped_missing_text", std::uint64_t{0});
  report.sha1_mismatches = j.value("sha1_mismatches", std::uint64_t{0});
  report.tokens_created = j.value("tokens_created", std::uint64_t{0});
  report.wall_seconds = j.value("wall_seconds", 0.0);
  if (report.batch_size == 0 || report.batches == 0)
    throw std::runtime_error(path.string() + ": incomplete run report");
  return report;
}

RunReport cmd_process(const RunConfig& config) {
  auto started = std::chrono::steady_clock::now();
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  if (config.worker_count == 0) throw std::invalid_argument("worker count must be at least 1");
  // open the dump before touching the output directory or spawning workers
  DumpReader reader(config.dump_path);
  fs::create_directories(config.output_dir);
  std::string dump_date = resolve_dump_date(config);
  check_manifest(config.output_dir, config.dump_path.filename().string(), config.batch_size,
                 dump_date, config.compress);

  BatchSink sink(config.output_dir, dump_date, config.compress);
  BatchCollector collector(sink);
  TaskQueue queue(std::min<std::size_t>(std::size_t{config.worker_count} * 4, 64));

  std::mutex error_mutex;
  std::string first_error;
  auto record_error = [&](const std::string& what) {
    std::lock_guard<std::mutex> lock(error_mutex);
    if (first_error.empty()) first_error = what;
  };

  std::vector<std::thread> workers;
  workers.reserve(config.worker_count);
  for (unsigned i = 0; i < config.worker_count; ++i) {
    workers.emplace_back([&] {
      while (auto task = queue.pop()) {
        try {
          collector.deliver(task->batch_id, process_page(task->page));
        } catch (const std::exception& e) {
          record_error("page " + std::to_string(task->page.page_id) + ": " + e.what());
          queue.abort();
          return;
        }
      }
    });
  }

  RunReport report;
  report.dump_date = dump_date;
  report.batch_size = config.batch_size;
  report.compress = config.compress;

  std::uint64_t kept = 0;
  std::uint64_t open_batch = 0, open_members = 0, max_batch = 0;
  bool open_resumed = false;
  std::uint64_t resumed_batches = 0;
  bool aborted = false;
  std::exception_ptr reader_failure;
  try {
    while (auto page = reader.next_page()) {
      ++report.pages_seen;
      if (report.pages_seen % 5000 == 0)
        std::fprintf(stderr, "processed %llu pages...\n",
                     static_cast<unsigned long long>(report.pages_seen));
      PageSkipReason reason = page_skip_reason(*page);
      if (reason != PageSkipReason::none) {
        ++report.pages_skipped[std::string(page_skip_reason_name(reason))];
        continue;
      }
      std::uint64_t batch_id = kept / config.batch_size + 1;
      ++kept;
      if (batch_id != open_batch) {
        if (open_batch != 0 && !open_resumed) collector.close_batch(open_batch, open_members);
        open_batch = batch_id;
        open_members = 0;
        open_resumed = sink.marker_exists(batch_id);
        if (open_resumed) ++resumed_batches;
        max_batch = batch_id;
      }
      if (open_resumed) continue;
      ++open_members;
      if (!queue.push({batch_id, std::move(*page)})) {
        aborted = true;
        break;
      }
    }
  } catch (...) {
    reader_failure = std::current_exception();
    aborted = true;
  }
  report.revisions_seen = reader.counters().revisions;
  report.sha1_mismatches = reader.counters().sha1_mismatches;
  if (open_batch != 0 && !open_resumed && !aborted)
    collector.close_batch(open_batch, open_members);
  queue.close();
  for (auto& w : workers) w.join();
  if (reader_failure) std::rethrow_exception(reader_failure);
  if (!first_error.empty()) throw std::runtime_error(first_error);
  if (!collector.empty()) throw std::runtime_error("internal: incomplete batch after join");

  if (max_batch == 0) {
    max_batch = 1;
    if (!sink.marker_exists(1)) sink.write_batch(1, {});
  }

  report.pages_processed = kept;
  report.batches = max_batch;
  for (std::uint64_t id = 1; id <= max_batch; ++id) {
    fs::path path = config.output_dir / marker_name(id);
    if (!fs::exists(path))
      throw std::runtime_error("batch " + std::to_string(id) + " did not complete");
    json marker = load_json_file(path);
    report.revisions_processed += marker.value("revisions_processed", std::uint64_t{0});
    report.revisions_skipped_missing_text +=
        marker.value("revisions_skipped_missing_text", std::uint64_t{0});
    report.tokens_created += marker.value("tokens_created", std::uint64_t{0});
  }
  if (resumed_batches > 0)
    std::fprintf(stderr, "resumed: %llu batches were already complete\n",
                 static_cast<unsigned long long>(resumed_batches));

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json j;
  j["dump_date"] = report.dump_date;
  j["batch_size"] = report.batch_size;
  j["compress"] = report.compress;
  j["batches"] = report.batches;
  j["pages_seen"] = report.pages_seen;
  j["pages_processed"] = report.pages_processed;
  j["pages_skipped"] = report.pages_skipped;
  j["revisions_seen"] = report.revisions_seen;
  j["revisions_processed"] = report.revisions_processed;
  j["revisions_skipped_missing_text"] = report.revisions_skipped_missing_text;
  j["sha1_mismatches"] = report.sha1_mismatches;
  j["tokens_created"] = report.tokens_created;
  j["wall_seconds"] = report.wall_seconds;
  write_text_atomic(config.output_dir / kReportName, j.dump(2) + "\n");
  return report;
}

std::unordered_map<std::string, std::uint32_t> reconstruct_tokens(const ArticleHistory& article,
                                                                  RevId rev_id) {
  std::unordered_map<RevId, std::size_t> order;
  order.reserve(article.revisions.size());
  for (std::size_t i = 0; i < article.revisions.size(); ++i)
    order[article.revisions[i].rev_id] = i;
  auto it = order.find(rev_id);
  if (it == order.end())
    throw IntegrityError("revision " + std::to_string(rev_id) + " not in article history");
  std::size_t upto = it->second;

  auto index_of = [&](RevId rev, TokenId token) {
    auto found = order.find(rev);
    if (found == order.end())
      throw IntegrityError("token " + std::to_string(token) + " references unknown revision " +
                           std::to_string(rev));
    return found->second;
  };

  std::unordered_map<std::string, std::uint32_t> counts;
  for (const TokenHistory& t : article.tokens) {
    if (index_of(t.origin_rev_id, t.token_id) > upto) continue;
    std::size_t outs = 0, ins = 0;
    for (RevId r : t.out)
      if (index_of(r, t.token_id) <= upto) ++outs;
    for (RevId r : t.in)
      if (index_of(r, t.token_id) <= upto) ++ins;
    if (outs == ins) ++counts[t.str];
  }
  return counts;
}

ValidateOutcome cmd_validate(const RunConfig& config, const ValidateOptions& options) {
  RunReport run = load_run_report(config.output_dir);
  auto catalog = scan_batches(config.output_dir, run, false);

  ValidateOutcome outcome;
  std::ostringstream report;
  std::size_t reported_pairs = 0;
  auto note_mismatch = [&](const std::string& line) {
    ++outcome.mismatching_revisions;
    if (reported_pairs < options.max_reported_pairs) {
      report << line << '\n';
      ++reported_pairs;
    }
  };

  std::uint64_t kept = 0;
  std::uint64_t loaded_batch = 0;
  bool batch_bad = false;
  BatchData data;

  DumpReader reader(config.dump_path);
  while (auto page = reader.next_page()) {
    if (page_skip_reason(*page) != PageSkipReason::none) continue;
    std::uint64_t batch_id = kept / run.batch_size + 1;
    ++kept;
    if (batch_id != loaded_batch) {
      loaded_batch = batch_id;
      batch_bad = false;
      data = BatchData{};
      auto it = catalog.find(batch_id);
      if (it == catalog.end()) {
        note_mismatch("batch " + std::to_string(batch_id) + ": files missing");
        batch_bad = true;
      } else {
        try {
          data = load_batch(it->second, false);
        } catch (const FormatError& e) {
          note_mismatch("batch " + std::to_string(batch_id) + ": unreadable: " + e.what());
          batch_bad = true;
        }
      }
    }
    if (batch_bad) continue;

    ++outcome.articles_checked;
    PageId pid = page->page_id;
    std::vector<RevisionRow> revision_rows;
    if (auto it = data.revisions.find(pid); it != data.revisions.end()) revision_rows = it->second;
    std::vector<ContentRow> current_rows, deleted_rows;
    if (auto it = data.current.find(pid); it != data.current.end()) current_rows = it->second;
    if (auto it = data.deleted.find(pid); it != data.deleted.end()) deleted_rows = it->second;

    std::uint64_t expected_revisions = 0;
    for (const auto& rev : page->revisions)
      if (rev.text) ++expected_revisions;
    if (revision_rows.size() != expected_revisions) {
      note_mismatch("page " + std::to_string(pid) + ": dataset has " +
                    std::to_string(revision_rows.size()) + " revisions, dump has " +
                    std::to_string(expected_revisions));
      continue;
    }

    ArticleHistory article;
    try {
      std::sort(revision_rows.begin(), revision_rows.end(),
                [](const RevisionRow& a, const RevisionRow& b) {
                  return std::tie(a.timestamp, a.rev_id) < std::tie(b.timestamp, b.rev_id);
                });
      article = assemble_article(pid, std::move(revision_rows), current_rows, deleted_rows);
    } catch (const std::exception& e) {
      note_mismatch("page " + std::to_string(pid) + ": " + e.what());
      continue;
    }

    for (const auto& rev : page->revisions) {
      if (!rev.text) continue;
      if (!sampled(pid, rev.rev_id, options.sample_fraction)) continue;
      ++outcome.revisions_checked;
      std::unordered_map<std::string, std::uint32_t> expected;
      for (auto& token : tokenize(*rev.text)) ++expected[token];
      std::unordered_map<std::string, std::uint32_t> actual;
      try {
        actual = reconstruct_tokens(article, rev.rev_id);
      } catch (const IntegrityError& e) {
        note_mismatch("page " + std::to_string(pid) + " rev " + std::to_string(rev.rev_id) +
                      ": " + e.what());
        continue;
      }
      if (actual == expected) continue;

      std::map<std::string, std::int64_t> diff;
      for (const auto& [str, n] : expected) diff[str] += n;
      for (const auto& [str, n] : actual) diff[str] -= n;
      std::ostringstream line;
      line << "page " << pid << " rev " << rev.rev_id << ": token multiset differs:";
      std::size_t listed = 0;
      for (const auto& [str, delta] : diff) {
        if (delta == 0) continue;
        if (listed++ == options.max_reported_tokens) {
          line << " ...";
          break;
        }
        line << ' ' << (delta > 0 ? '-' : '+') << (delta > 0 ? delta : -delta) << " \"" << str
             << '"';
      }
      note_mismatch(line.str());
    }
  }
  outcome.report = report.str();
  return outcome;
}

namespace {

void write_survival_table(const fs::path& dir, const std::map<YearMonth, SurvivalBucket>& buckets) {
  CsvTable table(dir / "analysis_survival_monthly.csv",
                 {"month", "added", "died_within_horizon", "survived_horizon_not_to_end",
                  "survived_to_end", "survivors_registered", "survivors_unregistered",
                  "survivors_bot"});
  for (const auto& [month, b] : buckets) {
    table.row({format_year_month(month), std::to_string(b.added),
               std::to_string(b.died_within_horizon),
               std::to_string(b.survived_horizon_not_to_end), std::to_string(b.survived_to_end),
               std::to_string(b.survivors_registered), std::to_string(b.survivors_unregistered),
               std::to_string(b.survivors_bot)});
  }
  table.finish();
}

void write_conflict_table(const fs::path& dir, ConflictScope scope,
                          const std::vector<ConflictAggregateRow>& rows) {
  const char* name = scope == ConflictScope::article             ? "analysis_conflict_article.csv"
                     : scope == ConflictScope::string_global     ? "analysis_conflict_string.csv"
                                                                 : "analysis_conflict_string_in_article.csv";
  CsvTable table(dir / name,
                 {"page_id", "str", "n", "cb_sum", "ct_sum", "cb_norm", "ct_norm"});
  for (const auto& row : rows) {
    table.row({scope == ConflictScope::string_global ? "" : std::to_string(row.page_id),
               csv_quote(row.str), std::to_string(row.n), std::to_string(row.cb_sum),
               format_double(row.ct_sum), format_double(row.cb_norm),
               format_double(row.ct_norm)});
  }
  table.finish();
}

void write_revert_tables(const fs::path& dir, const RevertSummary& summary,
                         const std::vector<RevertClassification>& pairs) {
  {
    CsvTable table(dir / "analysis_revert_pairs.csv",
                   {"page_id", "reverting_rev_id", "reverted_rev_id", "undone_actions",
                    "target_original_actions", "ratio", "full", "self"});
    for (const auto& p : pairs) {
      table.row({std::to_string(p.page_id), std::to_string(p.reverting_rev_id),
                 std::to_string(p.reverted_rev_id), std::to_string(p.undone_actions),
                 std::to_string(p.target_original_actions), format_double(p.ratio),
                 p.full ? "1" : "0", p.self ? "1" : "0"});
    }
    table.finish();
  }
  {
    CsvTable table(dir / "analysis_revert_ratio_histogram.csv", {"bin_low", "bin_high", "count"});
    for (std::size_t i = 0; i < summary.ratio_histogram.size(); ++i) {
      table.row({format_double(i / 100.0), format_double((i + 1) / 100.0),
                 std::to_string(summary.ratio_histogram[i])});
    }
    table.finish();
  }
  {
    CsvTable table(dir / "analysis_revert_undone_histogram.csv",
                   {"undone_from", "undone_to", "count"});
    for (std::size_t i = 0; i < summary.undone_histogram.size(); ++i) {
      std::uint64_t low = 1ull << i;
      std::uint64_t high = (1ull << (i + 1)) - 1;
      table.row({std::to_string(low), std::to_string(high),
                 std::to_string(summary.undone_histogram[i])});
    }
    table.finish();
  }

  std::ostringstream text;
  auto pct = [](std::uint64_t part, std::uint64_t whole) {
    if (whole == 0) return std::string("0.00%");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * static_cast<double>(part) / static_cast<double>(whole));
    return std::string(buf);
  };
  text << "revisions: " << summary.revisions << '\n';
  text << "purely adding: " << summary.purely_adding << " ("
       << pct(summary.purely_adding, summary.revisions) << ")\n";
  text << "self-correcting: " << summary.self_correcting << " ("
       << pct(summary.self_correcting, summary.revisions) << ")\n";
  text << "revert pairs: " << summary.pairs << '\n';
  const char* self_label[2] = {"other", "self"};
  const char* full_label[2] = {"partial", "full"};
  for (int s = 0; s < 2; ++s)
    for (int f = 0; f < 2; ++f)
      text << "unique reverting revisions (" << self_label[s] << ", " << full_label[f]
           << "): " << summary.acting_cells[s][f] << '\n';
  for (int s = 0; s < 2; ++s)
    for (int f = 0; f < 2; ++f)
      text << "unique reverted revisions (" << self_label[s] << ", " << full_label[f]
           << "): " << summary.target_cells[s][f] << '\n';
  const RevertMethodComparison& cmp = summary.comparison;
  text << "identity reverts: " << cmp.identity_pairs << '\n';
  text << "identity reverts seen as full token reverts: " << cmp.identity_found_full << " ("
       << pct(cmp.identity_found_full, cmp.identity_pairs) << ")\n";
  text << "identity reverts seen as partial token reverts: " << cmp.identity_found_partial
       << '\n';
  text << "identity reverts with no token-level pair: " << cmp.identity_not_found << '\n';
  text << "full token reverts: " << cmp.token_full_pairs << '\n';
  text << "full token reverts also found by hashing: " << cmp.token_full_found_by_identity
       << " (" << pct(cmp.token_full_found_by_identity, cmp.token_full_pairs) << ")\n";
  write_text_atomic(dir / "analysis_revert_summary.txt", text.str());
}

}  // namespace

void cmd_analyze(const RunConfig& config, const AnalyzeOptions& options) {
  RunReport run = load_run_report(config.output_dir);
  bool need_hashes = options.kind == AnalysisKind::reverts;
  auto catalog = scan_batches(config.output_dir, run, need_hashes);

  std::unordered_set<std::uint64_t> bot_ids;
  if (!options.bot_list_path.empty()) bot_ids = load_bot_list(options.bot_list_path);

  std::optional<SurvivalAccumulator> survival;
  if (options.kind == AnalysisKind::survival)
    survival.emplace(options.end_instant.value_or(std::numeric_limits<UtcSeconds>::max()),
                     options.horizon_seconds, bot_ids);
  std::optional<ConflictAggregator> conflict;
  if (options.kind == AnalysisKind::conflict)
    conflict.emplace(ConflictAggregateOptions{options.scope, options.metric, options.min_n,
                                              options.include_deleted});
  std::optional<RevertAnalyzer> reverts;
  std::vector<RevertClassification> revert_pairs;
  if (options.kind == AnalysisKind::reverts) reverts.emplace();

  for (std::uint64_t id = 1; id <= run.batches; ++id) {
    BatchData data = load_batch(catalog.at(id), need_hashes);
    for (auto& [pid, revision_rows] : data.revisions) {
      std::sort(revision_rows.begin(), revision_rows.end(),
                [](const RevisionRow& a, const RevisionRow& b) {
                  return std::tie(a.timestamp, a.rev_id) < std::tie(b.timestamp, b.rev_id);
                });
      std::vector<ContentRow> current_rows, deleted_rows;
      if (auto it = data.current.find(pid); it != data.current.end())
        current_rows = std::move(it->second);
      if (auto it = data.deleted.find(pid); it != data.deleted.end())
        deleted_rows = std::move(it->second);
      ArticleHistory article = assemble_article(pid, revision_rows, current_rows, deleted_rows);
      if (survival) survival->add_article(article);
      if (conflict) conflict->add_article(article);
      if (reverts) {
        std::unordered_map<RevId, std::size_t> order;
        for (std::size_t i = 0; i < article.revisions.size(); ++i)
          order[article.revisions[i].rev_id] = i;
        std::vector<std::pair<RevId, std::string>> hashes;
        if (auto it = data.hashes.find(pid); it != data.hashes.end()) {
          for (auto& row : it->second) {
            if (!order.count(row.rev_id))
              throw IntegrityError("page " + std::to_string(pid) + ": hash row for revision " +
                                   std::to_string(row.rev_id) + " not in revision table");
            hashes.emplace_back(row.rev_id, std::move(row.sha1));
          }
        }
        std::sort(hashes.begin(), hashes.end(),
                  [&](const auto& a, const auto& b) { return order[a.first] < order[b.first]; });
        ArticleRevertResult result = reverts->add_article(article, hashes);
        revert_pairs.insert(revert_pairs.end(), result.classifications.begin(),
                            result.classifications.end());
      }
    }
  }

  if (survival) write_survival_table(config.output_dir, survival->buckets());
  if (conflict) write_conflict_table(config.output_dir, options.scope, conflict->finish());
  if (reverts) write_revert_tables(config.output_dir, reverts->summary(), revert_pairs);
}

std::unordered_set<std::uint64_t> load_bot_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read bot list " + path.string());
  std::unordered_set<std::uint64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t\r");
    std::string_view body(line.data() + begin, end - begin + 1);
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec != std::errc() || ptr != body.data() + body.size() || value == 0)
      throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                               ": expected a positive user id, got \"" + std::string(body) + "\"");
    ids.insert(value);
  }
  return ids;
}

}  // namespace toktrack
