#include "protofuzz/codec.hpp"

#include <cctype>
#include <sstream>

#include "protofuzz/error.hpp"

namespace protofuzz {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const std::vector<CodecSpec>& builtin_codecs() {
  static const std::vector<CodecSpec> codecs = [] {
    std::vector<CodecSpec> c;
    c.push_back({"ftp", TerminatorRule{"\r\n"}, LeadingDecimalRule{3}, "\r\n", true});
    c.push_back({"smtp", TerminatorRule{"\r\n"}, LeadingDecimalRule{3}, "\r\n", true});
    // "RTSP/1.0 200 OK": the code sits right after the 9-byte version field.
    c.push_back({"rtsp", TerminatorRule{"\r\n\r\n"}, FixedOffsetRule{9, 3}, "\r\n\r\n", false});
    return c;
  }();
  return codecs;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

std::uint32_t parse_decimal(std::string_view s) {
  std::uint32_t v = 0;
  for (char ch : s) v = v * 10 + static_cast<std::uint32_t>(ch - '0');
  return v;
}

void split_by_terminator(const TerminatorRule& rule, std::string_view raw,
                         MessageSequence& seq) {
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const std::size_t hit = raw.find(rule.terminator, pos);
    Region r;
    r.start = pos;
    if (hit == std::string_view::npos) {
      r.end = raw.size();
      r.incomplete = true;
    } else {
      r.end = hit + rule.terminator.size();
    }
    pos = r.end;
    seq.regions.push_back(std::move(r));
  }
}

void split_by_length_prefix(const LengthPrefixRule& rule, std::string_view raw,
                            MessageSequence& seq) {
  std::size_t pos = 0;
  while (pos < raw.size()) {
    Region r;
    r.start = pos;
    if (raw.size() - pos < rule.width) {
      r.end = raw.size();
      r.incomplete = true;
    } else {
      std::uint64_t payload = 0;
      for (unsigned i = 0; i < rule.width; ++i) {
        payload = (payload << 8) | static_cast<unsigned char>(raw[pos + i]);
      }
      const std::size_t remaining = raw.size() - pos - rule.width;
      if (payload > remaining) {
        r.end = raw.size();
        r.incomplete = true;
      } else {
        r.end = pos + rule.width + static_cast<std::size_t>(payload);
      }
    }
    pos = r.end;
    seq.regions.push_back(std::move(r));
  }
}

}  // namespace

void validate(const CodecSpec& codec) {
  std::visit(Overloaded{
                 [](const TerminatorRule& r) {
                   if (r.terminator.empty()) throw ConfigError("codec terminator must be non-empty");
                 },
                 [](const LengthPrefixRule& r) {
                   if (r.width != 1 && r.width != 2 && r.width != 4) {
                     throw ConfigError("length prefix width must be 1, 2 or 4");
                   }
                 }},
             codec.boundary_rule);
  std::visit(Overloaded{
                 [](const LeadingDecimalRule& r) {
                   if (r.max_digits == 0 || r.max_digits > 9) {
                     throw ConfigError("leading_decimal max_digits must be in 1..9");
                   }
                 },
                 [&](const FixedOffsetRule& r) {
                   if (r.width == 0 || r.width > 9) throw ConfigError("fixed_offset width must be in 1..9");
                   if (codec.response_separator.empty()) {
                     throw ConfigError("fixed_offset needs a response separator");
                   }
                 }},
             codec.status_rule);
}

const CodecSpec& codec_by_name(std::string_view name) {
  for (const CodecSpec& c : builtin_codecs()) {
    if (c.name == name) return c;
  }
  throw ConfigError("unknown codec '" + std::string(name) + "'");
}

std::vector<std::string> codec_names() {
  std::vector<std::string> names;
  for (const CodecSpec& c : builtin_codecs()) names.push_back(c.name);
  return names;
}

MessageSequence split_requests(const CodecSpec& codec, std::string_view raw) {
  if (raw.empty()) throw InvalidArgument("split_requests: empty capture");
  MessageSequence seq;
  seq.buffer = Bytes(raw);
  std::visit(Overloaded{
                 [&](const TerminatorRule& r) { split_by_terminator(r, raw, seq); },
                 [&](const LengthPrefixRule& r) { split_by_length_prefix(r, raw, seq); }},
             codec.boundary_rule);
  return seq;
}

std::vector<std::uint32_t> extract_status_codes(const CodecSpec& codec,
                                                std::string_view response) noexcept {
  std::vector<std::uint32_t> codes;
  if (response.empty()) return codes;
  std::visit(
      Overloaded{
          [&](const LeadingDecimalRule& rule) {
            std::size_t line = 0;
            while (line < response.size()) {
              std::size_t eol = response.find('\n', line);
              if (eol == std::string_view::npos) eol = response.size();
              std::size_t n = 0;
              while (line + n < eol &&
                     std::isdigit(static_cast<unsigned char>(response[line + n]))) {
                ++n;
              }
              if (n > 0 && n <= rule.max_digits) {
                codes.push_back(parse_decimal(response.substr(line, n)));
              }
              line = eol + 1;
            }
          },
          [&](const FixedOffsetRule& rule) {
            std::size_t unit = 0;
            while (unit < response.size()) {
              std::size_t stop = response.find(codec.response_separator, unit);
              if (stop == std::string_view::npos) stop = response.size();
              const std::string_view body = response.substr(unit, stop - unit);
              if (body.size() >= rule.offset + rule.width) {
                const std::string_view field = body.substr(rule.offset, rule.width);
                if (all_digits(field)) codes.push_back(parse_decimal(field));
              }
              unit = stop + codec.response_separator.size();
            }
          }},
      codec.status_rule);
  return codes;
}

StateRegistry::StateRegistry(std::uint32_t state_size) : state_size_(state_size) {
  if (state_size < 2) throw InvalidArgument("state_size must be at least 2");
}

StateId StateRegistry::number(std::uint32_t raw_code) {
  if (auto it = key_by_raw_.find(raw_code); it != key_by_raw_.end()) return it->second;
  // Keys stay below state_size so (prev * state_size + cur) never aliases
  // across rows; key 0 is the initial state.
  if (raw_by_key_.size() + 1 >= state_size_) {
    std::ostringstream os;
    os << "state registry full: " << raw_by_key_.size()
       << " distinct states already numbered; raise STATE_SIZE (raw code " << raw_code << ")";
    throw StateSpaceExhausted(os.str());
  }
  raw_by_key_.push_back(raw_code);
  const StateId id{static_cast<std::uint32_t>(raw_by_key_.size())};
  key_by_raw_.emplace(raw_code, id);
  return id;
}

std::optional<StateId> StateRegistry::find(std::uint32_t raw_code) const {
  if (auto it = key_by_raw_.find(raw_code); it != key_by_raw_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::uint32_t> StateRegistry::raw_code(StateId id) const {
  if (id.is_initial() || id.value > raw_by_key_.size()) return std::nullopt;
  return raw_by_key_[id.value - 1];
}

std::string StateRegistry::to_tsv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < raw_by_key_.size(); ++i) {
    os << raw_by_key_[i] << '\t' << (i + 1) << '\n';
  }
  return os.str();
}

}  // namespace protofuzz
