#include "protofuzz/bench_targets.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include "protofuzz/codec.hpp"
#include "protofuzz/error.hpp"

namespace protofuzz {
namespace {

/// Scrambles a dense site number into a 16-bit branch key, the way a
/// compile-time instrumentation pass would assign random block ids.
constexpr std::uint32_t site_key(std::uint32_t site, std::uint32_t salt) {
  std::uint32_t x = (site + 1) * 0x9e3779b1u ^ salt;
  x ^= x >> 15;
  x *= 0x2c1b3c6du;
  x ^= x >> 12;
  return x & 0xffffu;
}

/// Records AFL-style (prev, cur) edges for one request. Handlers are written
/// so every site has exactly one predecessor, making edges and sites 1:1.
class EdgeTracer {
 public:
  EdgeTracer(std::vector<EdgeKey>& out, std::uint32_t salt) : out_(out), salt_(salt) {}

  void hit(auto site) {
    const std::uint32_t key = site_key(static_cast<std::uint32_t>(site), salt_);
    out_.push_back({prev_, key});
    prev_ = key;
  }

 private:
  std::vector<EdgeKey>& out_;
  std::uint32_t salt_;
  std::uint32_t prev_ = 0;
};

// ---------------------------------------------------------------------------
// FTP-like server

enum class FtpSite : std::uint32_t {
  kGreet,
  kDispatch,
  kUnknown,
  kUser, kUserNoArg, kUserOk, kUserRelogin,
  kPass, kPassBadSequence, kPassOk, kPassWrong, kPassAlready,
  kQuit, kNoop, kSyst, kHelp, kFeat,
  kMkd, kMkdDenied, kMkdNoArg, kMkdExists, kMkdFull, kMkdOk,
  kCwd, kCwdDenied, kCwdNoArg, kCwdOk, kCwdMissing,
  kCdup, kCdupDenied, kCdupOk,
  kPwd, kPwdDenied, kPwdOk,
  kStor, kStorDenied, kStorNoArg, kStorOverflow, kStorFull, kStorOk,
  kRetr, kRetrDenied, kRetrNoArg, kRetrOk, kRetrMissing,
  kList, kListDenied, kListOk,
  kDele, kDeleDenied, kDeleNoArg, kDeleOk, kDeleMissing,
  kRmd, kRmdDenied, kRmdNoArg, kRmdOk, kRmdMissing,
  kRnfr, kRnfrDenied, kRnfrNoArg, kRnfrOk, kRnfrMissing,
  kRnto, kRntoDenied, kRntoNoArg, kRntoBadSequence, kRntoOk,
  kType, kTypeDenied, kTypeOk, kTypeBad,
  kPasv, kPasvDenied, kPasvOk,
  kSize, kSizeDenied, kSizeNoArg, kSizeOk, kSizeMissing,
  kRest, kRestDenied, kRestOk, kRestBad,
  kCount,
};

constexpr std::uint32_t kFtpSalt = 0x46545031u;
constexpr std::uint32_t kRtspSalt = 0x52545350u;

struct ParsedLine {
  std::string command;
  std::string arg;
};

std::string_view strip_line_end(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

ParsedLine parse_ftp_line(std::string_view message) {
  const std::string_view line = strip_line_end(message);
  ParsedLine out;
  const std::size_t sp = line.find(' ');
  const std::string_view cmd = line.substr(0, sp);
  out.command.reserve(cmd.size());
  for (char ch : cmd) out.command += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (sp != std::string_view::npos) out.arg = std::string(line.substr(sp + 1));
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

constexpr std::string_view kTransfer = "150 Opening data connection.\r\n226 Transfer complete.\r\n";

// ---------------------------------------------------------------------------
// RTSP-flavoured server

enum class RtspSite : std::uint32_t {
  kDispatch,
  kBadRequest,
  kUnknown,
  kOptions,
  kDescribe, kDescribeOk, kDescribeNotFound,
  kSetup, kSetupNoTransport, kSetupOk, kSetupWrongState,
  kPlay, kPlayShortcut, kPlayWrongState, kPlayOk, kPlayBadSession, kPlayAgain,
  kPause, kPauseOk, kPauseNoSession, kPauseWrongState,
  kTeardown, kTeardownOk, kTeardownNoSession, kTeardownCrash,
  kGetParameter,
  kCount,
};

struct RtspRequest {
  std::string method;
  std::string url;
  std::string version;
  std::vector<std::pair<std::string, std::string>> headers;

  const std::string* header(std::string_view name) const {
    for (const auto& [k, v] : headers) {
      if (k.size() != name.size()) continue;
      bool eq = true;
      for (std::size_t i = 0; i < k.size() && eq; ++i) {
        eq = std::tolower(static_cast<unsigned char>(k[i])) ==
             std::tolower(static_cast<unsigned char>(name[i]));
      }
      if (eq) return &v;
    }
    return nullptr;
  }
};

bool parse_rtsp(std::string_view message, RtspRequest& req) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < message.size()) {
    std::size_t eol = message.find("\r\n", pos);
    if (eol == std::string_view::npos) eol = message.size();
    lines.push_back(message.substr(pos, eol - pos));
    pos = eol + 2;
  }
  if (lines.empty()) return false;
  std::istringstream first{std::string(lines[0])};
  if (!(first >> req.method >> req.url >> req.version)) return false;
  if (req.version.rfind("RTSP/", 0) != 0) return false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view l = lines[i];
    const std::size_t colon = l.find(':');
    if (colon == std::string_view::npos) continue;
    std::string_view value = l.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    req.headers.emplace_back(std::string(l.substr(0, colon)), std::string(value));
  }
  return true;
}

std::string rtsp_reply(int code, std::string_view reason, const RtspRequest& req,
                       bool with_session) {
  std::ostringstream os;
  os << "RTSP/1.0 " << code << ' ' << reason << "\r\n";
  if (const std::string* cseq = req.header("CSeq")) os << "CSeq: " << *cseq << "\r\n";
  if (with_session) os << "Session: " << HiddenTransitionServer::kSessionId << "\r\n";
  os << "\r\n";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

HandleResult FtpLikeServer::greet() {
  HandleResult r;
  EdgeTracer t(r.edges, kFtpSalt);
  t.hit(FtpSite::kGreet);
  r.response = "220 protofuzz FTP-like server ready.\r\n";
  return r;
}

HandleResult FtpLikeServer::handle(std::string_view message) {
  if (crashed_ || closed_) throw InvalidArgument("ftp server: session is no longer active");
  HandleResult r;
  EdgeTracer t(r.edges, kFtpSalt);
  t.hit(FtpSite::kDispatch);
  const ParsedLine line = parse_ftp_line(message);
  const std::string& cmd = line.command;
  const std::string& arg = line.arg;
  const bool logged_in = phase_ == Phase::kLoggedIn;
  auto reply = [&](std::string_view text) { r.response = std::string(text); };

  // Commands behind the login wall share one shape: the command site, then
  // either a denial site or the command's own outcome sites.
  auto gated = [&](FtpSite command, FtpSite denied) {
    t.hit(command);
    if (logged_in) return true;
    t.hit(denied);
    reply("530 Not logged in.\r\n");
    return false;
  };

  if (cmd == "USER") {
    t.hit(FtpSite::kUser);
    if (arg.empty()) {
      t.hit(FtpSite::kUserNoArg);
      reply("501 Syntax error in parameters or arguments.\r\n");
    } else {
      t.hit(logged_in ? FtpSite::kUserRelogin : FtpSite::kUserOk);
      phase_ = Phase::kUserGiven;
      user_known_ = arg == "foo";
      anonymous_ = arg == "anonymous";
      after_cwd_ = false;
      reply("331 User name okay, need password.\r\n");
    }
  } else if (cmd == "PASS") {
    t.hit(FtpSite::kPass);
    if (phase_ == Phase::kLoggedIn) {
      t.hit(FtpSite::kPassAlready);
      reply("230 Already logged in.\r\n");
    } else if (phase_ != Phase::kUserGiven) {
      t.hit(FtpSite::kPassBadSequence);
      reply("503 Login with USER first.\r\n");
    } else if (anonymous_ || (user_known_ && arg == "foo")) {
      t.hit(FtpSite::kPassOk);
      phase_ = Phase::kLoggedIn;
      reply("230 User logged in, proceed.\r\n");
    } else {
      t.hit(FtpSite::kPassWrong);
      phase_ = Phase::kFresh;
      reply("530 Login incorrect.\r\n");
    }
  } else if (cmd == "QUIT") {
    t.hit(FtpSite::kQuit);
    closed_ = true;
    r.closed = true;
    reply("221 Goodbye!\r\n");
  } else if (cmd == "NOOP") {
    t.hit(FtpSite::kNoop);
    reply("200 NOOP ok.\r\n");
  } else if (cmd == "SYST") {
    t.hit(FtpSite::kSyst);
    reply("215 UNIX Type: L8\r\n");
  } else if (cmd == "HELP") {
    t.hit(FtpSite::kHelp);
    reply("214 Help OK.\r\n");
  } else if (cmd == "FEAT") {
    t.hit(FtpSite::kFeat);
    reply("211 No extensions.\r\n");
  } else if (cmd == "MKD") {
    if (gated(FtpSite::kMkd, FtpSite::kMkdDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kMkdNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (contains(dirs_, arg)) {
        t.hit(FtpSite::kMkdExists);
        reply("550 Directory already exists.\r\n");
      } else if (dirs_.size() >= kMaxEntries) {
        t.hit(FtpSite::kMkdFull);
        reply("452 Insufficient storage space.\r\n");
      } else {
        t.hit(FtpSite::kMkdOk);
        dirs_.push_back(arg);
        reply("257 Directory created.\r\n");
      }
    }
  } else if (cmd == "CWD") {
    if (gated(FtpSite::kCwd, FtpSite::kCwdDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kCwdNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (arg == "/" || arg == ".." || contains(dirs_, arg)) {
        t.hit(FtpSite::kCwdOk);
        after_cwd_ = true;
        reply("250 Requested file action okay, completed.\r\n");
      } else {
        t.hit(FtpSite::kCwdMissing);
        reply("550 No such directory.\r\n");
      }
    }
  } else if (cmd == "CDUP") {
    if (gated(FtpSite::kCdup, FtpSite::kCdupDenied)) {
      t.hit(FtpSite::kCdupOk);
      after_cwd_ = false;
      reply("250 Directory changed to parent.\r\n");
    }
  } else if (cmd == "PWD") {
    if (gated(FtpSite::kPwd, FtpSite::kPwdDenied)) {
      t.hit(FtpSite::kPwdOk);
      reply("257 \"/\" is the current directory.\r\n");
    }
  } else if (cmd == "STOR") {
    if (gated(FtpSite::kStor, FtpSite::kStorDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kStorNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (after_cwd_ && arg.size() > kOverflowArgLength) {
        // Planted bug: fixed-size path buffer in the post-CWD code path.
        t.hit(FtpSite::kStorOverflow);
        crashed_ = true;
        r.crashed = true;
      } else if (!contains(files_, arg) && files_.size() >= kMaxEntries) {
        t.hit(FtpSite::kStorFull);
        reply("452 Insufficient storage space.\r\n");
      } else {
        t.hit(FtpSite::kStorOk);
        if (!contains(files_, arg)) files_.push_back(arg);
        rest_pending_ = false;
        reply(kTransfer);
      }
    }
  } else if (cmd == "RETR") {
    if (gated(FtpSite::kRetr, FtpSite::kRetrDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kRetrNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (contains(files_, arg)) {
        t.hit(FtpSite::kRetrOk);
        rest_pending_ = false;
        reply(kTransfer);
      } else {
        t.hit(FtpSite::kRetrMissing);
        reply("550 File not found.\r\n");
      }
    }
  } else if (cmd == "LIST") {
    if (gated(FtpSite::kList, FtpSite::kListDenied)) {
      t.hit(FtpSite::kListOk);
      reply(kTransfer);
    }
  } else if (cmd == "DELE") {
    if (gated(FtpSite::kDele, FtpSite::kDeleDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kDeleNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (contains(files_, arg)) {
        t.hit(FtpSite::kDeleOk);
        std::erase(files_, arg);
        reply("250 File deleted.\r\n");
      } else {
        t.hit(FtpSite::kDeleMissing);
        reply("550 File not found.\r\n");
      }
    }
  } else if (cmd == "RMD") {
    if (gated(FtpSite::kRmd, FtpSite::kRmdDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kRmdNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (contains(dirs_, arg)) {
        t.hit(FtpSite::kRmdOk);
        std::erase(dirs_, arg);
        reply("250 Directory removed.\r\n");
      } else {
        t.hit(FtpSite::kRmdMissing);
        reply("550 No such directory.\r\n");
      }
    }
  } else if (cmd == "RNFR") {
    if (gated(FtpSite::kRnfr, FtpSite::kRnfrDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kRnfrNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (contains(files_, arg) || contains(dirs_, arg)) {
        t.hit(FtpSite::kRnfrOk);
        rename_pending_ = true;
        reply("350 Ready for destination name.\r\n");
      } else {
        t.hit(FtpSite::kRnfrMissing);
        reply("550 File not found.\r\n");
      }
    }
  } else if (cmd == "RNTO") {
    if (gated(FtpSite::kRnto, FtpSite::kRntoDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kRntoNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (!rename_pending_) {
        t.hit(FtpSite::kRntoBadSequence);
        reply("503 Bad sequence of commands.\r\n");
      } else {
        t.hit(FtpSite::kRntoOk);
        rename_pending_ = false;
        reply("250 Rename successful.\r\n");
      }
    }
  } else if (cmd == "TYPE") {
    if (gated(FtpSite::kType, FtpSite::kTypeDenied)) {
      if (arg == "A" || arg == "I") {
        t.hit(FtpSite::kTypeOk);
        type_ = arg[0];
        reply("200 Type set.\r\n");
      } else {
        t.hit(FtpSite::kTypeBad);
        reply("504 Command not implemented for that parameter.\r\n");
      }
    }
  } else if (cmd == "PASV") {
    if (gated(FtpSite::kPasv, FtpSite::kPasvDenied)) {
      t.hit(FtpSite::kPasvOk);
      reply("227 Entering Passive Mode (127,0,0,1,195,80).\r\n");
    }
  } else if (cmd == "SIZE") {
    if (gated(FtpSite::kSize, FtpSite::kSizeDenied)) {
      if (arg.empty()) {
        t.hit(FtpSite::kSizeNoArg);
        reply("501 Syntax error in parameters or arguments.\r\n");
      } else if (contains(files_, arg)) {
        t.hit(FtpSite::kSizeOk);
        reply("213 0\r\n");
      } else {
        t.hit(FtpSite::kSizeMissing);
        reply("550 File not found.\r\n");
      }
    }
  } else if (cmd == "REST") {
    if (gated(FtpSite::kRest, FtpSite::kRestDenied)) {
      const bool numeric = !arg.empty() && std::all_of(arg.begin(), arg.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
      });
      if (numeric) {
        t.hit(FtpSite::kRestOk);
        rest_pending_ = true;
        reply("350 Restarting at given offset.\r\n");
      } else {
        t.hit(FtpSite::kRestBad);
        reply("501 Syntax error in parameters or arguments.\r\n");
      }
    }
  } else {
    t.hit(FtpSite::kUnknown);
    reply("500 Syntax error, command unrecognized.\r\n");
  }
  return r;
}

std::string FtpLikeServer::state_signature() const {
  std::ostringstream os;
  os << static_cast<int>(phase_) << user_known_ << anonymous_ << after_cwd_ << rename_pending_
     << rest_pending_ << type_ << crashed_ << closed_ << '|';
  for (const auto& d : dirs_) os << d << ',';
  os << '|';
  for (const auto& f : files_) os << f << ',';
  return os.str();
}

// ---------------------------------------------------------------------------

HandleResult HiddenTransitionServer::greet() { return {}; }

HandleResult HiddenTransitionServer::handle(std::string_view message) {
  if (crashed_ || closed_) throw InvalidArgument("rtsp server: session is no longer active");
  HandleResult r;
  EdgeTracer t(r.edges, kRtspSalt);
  t.hit(RtspSite::kDispatch);

  RtspRequest req;
  if (!parse_rtsp(message, req)) {
    t.hit(RtspSite::kBadRequest);
    r.response = "RTSP/1.0 400 Bad Request\r\n\r\n";
    return r;
  }
  const std::string& m = req.method;
  auto reply = [&](int code, std::string_view reason, bool session = false) {
    r.response = rtsp_reply(code, reason, req, session);
  };
  auto session_matches = [&] {
    const std::string* s = req.header("Session");
    return s != nullptr && *s == kSessionId;
  };

  if (m == "OPTIONS") {
    t.hit(RtspSite::kOptions);
    reply(200, "OK");
  } else if (m == "DESCRIBE") {
    t.hit(RtspSite::kDescribe);
    if (req.url.find("/stream") != std::string::npos) {
      t.hit(RtspSite::kDescribeOk);
      described_ = true;
      reply(200, "OK");
    } else {
      t.hit(RtspSite::kDescribeNotFound);
      reply(404, "Not Found");
    }
  } else if (m == "SETUP") {
    t.hit(RtspSite::kSetup);
    if (phase_ != Phase::kInit) {
      t.hit(RtspSite::kSetupWrongState);
      reply(455, "Method Not Valid in This State");
    } else if (req.header("Transport") == nullptr) {
      t.hit(RtspSite::kSetupNoTransport);
      reply(461, "Unsupported Transport");
    } else {
      t.hit(RtspSite::kSetupOk);
      phase_ = Phase::kReady;
      has_session_ = true;
      reply(200, "OK", true);
    }
  } else if (m == "PLAY") {
    t.hit(RtspSite::kPlay);
    if (phase_ == Phase::kInit) {
      if (req.header("Range") != nullptr) {
        // Undocumented INIT -> PLAY jump: no session is ever allocated.
        t.hit(RtspSite::kPlayShortcut);
        phase_ = Phase::kPlay;
        reply(200, "OK");
      } else {
        t.hit(RtspSite::kPlayWrongState);
        reply(455, "Method Not Valid in This State");
      }
    } else if (phase_ == Phase::kReady) {
      if (session_matches()) {
        t.hit(RtspSite::kPlayOk);
        phase_ = Phase::kPlay;
        reply(200, "OK", true);
      } else {
        t.hit(RtspSite::kPlayBadSession);
        reply(454, "Session Not Found");
      }
    } else {
      t.hit(RtspSite::kPlayAgain);
      reply(200, "OK", has_session_);
    }
  } else if (m == "PAUSE") {
    t.hit(RtspSite::kPause);
    if (phase_ != Phase::kPlay) {
      t.hit(RtspSite::kPauseWrongState);
      reply(455, "Method Not Valid in This State");
    } else if (!has_session_) {
      t.hit(RtspSite::kPauseNoSession);
      reply(454, "Session Not Found");
    } else {
      t.hit(RtspSite::kPauseOk);
      phase_ = Phase::kReady;
      reply(200, "OK", true);
    }
  } else if (m == "TEARDOWN") {
    t.hit(RtspSite::kTeardown);
    if (phase_ == Phase::kInit) {
      t.hit(RtspSite::kTeardownNoSession);
      reply(454, "Session Not Found");
    } else if (phase_ == Phase::kPlay && !has_session_) {
      // Planted bug: tears down a stream whose session was never created.
      t.hit(RtspSite::kTeardownCrash);
      crashed_ = true;
      r.crashed = true;
    } else {
      t.hit(RtspSite::kTeardownOk);
      phase_ = Phase::kInit;
      has_session_ = false;
      reply(200, "OK");
    }
  } else if (m == "GET_PARAMETER") {
    t.hit(RtspSite::kGetParameter);
    reply(200, "OK", has_session_);
  } else {
    t.hit(RtspSite::kUnknown);
    reply(501, "Not Implemented");
  }
  return r;
}

std::string HiddenTransitionServer::state_signature() const {
  std::ostringstream os;
  os << static_cast<int>(phase_) << has_session_ << described_ << crashed_ << closed_;
  return os.str();
}

// ---------------------------------------------------------------------------

BenchTarget bench_target_by_name(std::string_view name) {
  if (name == "ftp") return BenchTarget::kFtp;
  if (name == "rtsp") return BenchTarget::kRtsp;
  throw ConfigError("unknown builtin target '" + std::string(name) + "'");
}

std::string_view bench_target_name(BenchTarget target) {
  return target == BenchTarget::kFtp ? "ftp" : "rtsp";
}

std::string_view bench_codec_name(BenchTarget target) {
  return target == BenchTarget::kFtp ? "ftp" : "rtsp";
}

std::unique_ptr<ProtocolServer> make_server(BenchTarget target) {
  if (target == BenchTarget::kFtp) return std::make_unique<FtpLikeServer>();
  return std::make_unique<HiddenTransitionServer>();
}

std::size_t edge_count(BenchTarget target) {
  return target == BenchTarget::kFtp ? static_cast<std::size_t>(FtpSite::kCount)
                                     : static_cast<std::size_t>(RtspSite::kCount);
}

Bytes ftp_happy_path_capture() {
  return "USER foo\r\n"
         "PASS foo\r\n"
         "MKD demo\r\n"
         "CWD demo\r\n"
         "STOR test.txt\r\n"
         "LIST\r\n"
         "QUIT\r\n";
}

Bytes rtsp_happy_path_capture() {
  return "OPTIONS rtsp://127.0.0.1:8554/stream RTSP/1.0\r\nCSeq: 1\r\n\r\n"
         "DESCRIBE rtsp://127.0.0.1:8554/stream RTSP/1.0\r\nCSeq: 2\r\n"
         "Accept: application/sdp\r\n\r\n"
         "SETUP rtsp://127.0.0.1:8554/stream/track1 RTSP/1.0\r\nCSeq: 3\r\n"
         "Transport: RTP/AVP;unicast;client_port=5000-5001\r\n\r\n"
         "PLAY rtsp://127.0.0.1:8554/stream RTSP/1.0\r\nCSeq: 4\r\n"
         "Session: 4d2f1a\r\nRange: npt=0.000-\r\n\r\n"
         "TEARDOWN rtsp://127.0.0.1:8554/stream RTSP/1.0\r\nCSeq: 5\r\n"
         "Session: 4d2f1a\r\n\r\n";
}

Bytes happy_path_capture(BenchTarget target) {
  return target == BenchTarget::kFtp ? ftp_happy_path_capture() : rtsp_happy_path_capture();
}

// ---------------------------------------------------------------------------

namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

void serve_connection(BenchTarget target, int fd) {
  const CodecSpec& codec = codec_by_name(bench_codec_name(target));
  const Bytes& terminator = std::get<TerminatorRule>(codec.boundary_rule).terminator;
  auto server = make_server(target);
  const HandleResult hello = server->greet();
  if (!hello.response.empty() && !send_all(fd, hello.response)) return;

  std::string pending;
  char buf[4096];
  for (;;) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) return;
    pending.append(buf, static_cast<std::size_t>(n));
    // A read boundary also ends a message: the fuzzer sends one message per
    // write and waits for the answer before the next.
    while (!pending.empty()) {
      std::size_t cut = pending.find(terminator);
      cut = cut == std::string::npos ? pending.size() : cut + terminator.size();
      const std::string message = pending.substr(0, cut);
      pending.erase(0, cut);
      const HandleResult res = server->handle(message);
      if (res.crashed) std::abort();
      if (!res.response.empty() && !send_all(fd, res.response)) return;
      if (res.closed) return;
    }
  }
}

}  // namespace

int serve_tcp(BenchTarget target, std::uint16_t port, bool once, int ready_fd) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw HarnessError(std::string("socket: ") + std::strerror(errno), false);
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listener, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listener);
    throw HarnessError("bind/listen on port " + std::to_string(port) + ": " + err, false);
  }
  if (ready_fd >= 0) {
    const char byte = 1;
    [[maybe_unused]] const ssize_t w = ::write(ready_fd, &byte, 1);
  }
  for (;;) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    serve_connection(target, fd);
    ::close(fd);
    if (once) break;
  }
  ::close(listener);
  return 0;
}

}  // namespace protofuzz
