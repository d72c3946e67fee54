#include "protofuzz/capture_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "protofuzz/error.hpp"

namespace fs = std::filesystem;

namespace protofuzz {

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::string_view data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string format_crash_meta(const CrashMeta& meta) {
  std::ostringstream os;
  os << "codec " << meta.codec << '\n' << "target " << meta.target << '\n';
  for (const auto& [start, end] : meta.regions) os << "region " << start << ' ' << end << '\n';
  return os.str();
}

CrashMeta parse_crash_meta(std::string_view text) {
  CrashMeta meta;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "codec") {
      ls >> meta.codec;
    } else if (key == "target") {
      ls >> meta.target;
    } else if (key == "region") {
      std::size_t start = 0;
      std::size_t end = 0;
      if (!(ls >> start >> end) || start >= end) {
        throw InvalidArgument("bad region line in crash metadata: " + line);
      }
      meta.regions.emplace_back(start, end);
    } else {
      throw InvalidArgument("unknown key in crash metadata: " + key);
    }
  }
  if (meta.codec.empty()) throw InvalidArgument("crash metadata lacks a codec");
  return meta;
}

CrashMeta crash_meta_for(const MessageSequence& seq, std::string codec, std::string target) {
  CrashMeta meta{std::move(codec), std::move(target), {}};
  for (const Region& r : seq.regions) meta.regions.emplace_back(r.start, r.end);
  return meta;
}

fs::path meta_path(const fs::path& file) {
  fs::path p = file;
  p += ".meta";
  return p;
}

MessageSequence load_sequence_file(const fs::path& file, const CodecSpec& codec) {
  Bytes raw = read_file(file);
  if (raw.empty()) throw InvalidArgument(file.string() + " is empty");
  const fs::path sidecar = meta_path(file);
  if (!fs::exists(sidecar)) return split_requests(codec, raw);

  const CrashMeta meta = parse_crash_meta(read_file(sidecar));
  if (meta.codec != codec.name) {
    throw ConfigError(file.string() + " was recorded with codec " + meta.codec + ", not " +
                      codec.name);
  }
  MessageSequence seq;
  seq.buffer = std::move(raw);
  for (const auto& [start, end] : meta.regions) {
    Region r;
    r.start = start;
    r.end = end;
    seq.regions.push_back(std::move(r));
  }
  validate(seq);
  return seq;
}

std::vector<fs::path> list_captures(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("input directory " + dir.string() + " not found");
  std::vector<fs::path> out;
  const fs::path manifest = dir / "manifest.txt";
  if (fs::exists(manifest)) {
    std::istringstream in(read_file(manifest));
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      out.push_back(dir / line);
    }
    return out;
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ".meta" || entry.path().extension() == ".tmp") continue;
    out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MessageSequence> load_captures(const fs::path& dir, const CodecSpec& codec) {
  std::vector<MessageSequence> seqs;
  for (const fs::path& file : list_captures(dir)) {
    if (!fs::is_regular_file(file)) throw ConfigError("capture " + file.string() + " not found");
    if (fs::file_size(file) == 0) continue;
    seqs.push_back(load_sequence_file(file, codec));
  }
  if (seqs.empty()) throw ConfigError("no usable capture in " + dir.string());
  return seqs;
}

}  // namespace protofuzz
