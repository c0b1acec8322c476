#include "synthetic_kdd.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "iotad/kdd.hpp"
#include "iotad/rng.hpp"

namespace iotad::testkit {
namespace {

// Feature positions in the 41-column layout.
enum Col : std::size_t {
  kDuration = 0, kSrcBytes = 4, kDstBytes = 5, kLand = 6, kWrongFragment = 7, kHot = 9,
  kFailedLogins = 10, kLoggedIn = 11, kCompromised = 12, kRootShell = 13, kNumRoot = 15,
  kFileCreations = 16, kGuestLogin = 21, kCount = 22, kSrvCount = 23, kSerror = 24,
  kSrvSerror = 25, kRerror = 26, kSrvRerror = 27, kSameSrv = 28, kDiffSrv = 29,
  kSrvDiffHost = 30, kDstHostCount = 31, kDstHostSrvCount = 32, kDhSameSrv = 33,
  kDhDiffSrv = 34, kDhSameSrcPort = 35, kDhSrvDiffHost = 36, kDhSerror = 37,
  kDhSrvSerror = 38, kDhRerror = 39, kDhSrvRerror = 40,
};

const std::vector<std::string> kTcpServices = {
    "auth", "bgp", "courier", "csnet_ns", "ctf", "daytime", "discard", "domain", "echo",
    "efs", "exec", "finger", "ftp", "ftp_data", "gopher", "hostnames", "http", "http_443",
    "imap4", "iso_tsap", "klogin", "kshell", "ldap", "link", "login", "mtp", "name",
    "netbios_dgm", "netbios_ns", "netbios_ssn", "netstat", "nnsp", "nntp", "other",
    "pop_2", "pop_3", "printer", "private", "remote_job", "rje", "shell", "smtp",
    "sql_net", "ssh", "sunrpc", "supdup", "systat", "telnet", "time", "uucp", "uucp_path",
    "vmnet", "whois", "X11", "Z39_50", "IRC"};

class Builder {
 public:
  explicit Builder(Rng& rng) : rng_(rng) {}

  kdd::Record start(const char* protocol, const std::string& service, const char* flag,
                    const std::string& label) {
    kdd::Record r;
    r.protocol_type = protocol;
    r.service = service;
    r.flag = flag;
    r.raw_label = label;
    r.category = kdd::map_attack_category(label);
    return r;
  }

  static void set(kdd::Record& r, std::size_t col, double v) { r.numeric[kdd::numeric_slot(col)] = v; }
  void rate(kdd::Record& r, std::size_t col, double lo, double hi) {
    set(r, col, std::round(std::clamp(rng_.uniform(lo, hi), 0.0, 1.0) * 100.0) / 100.0);
  }
  double integer(double lo, double hi) { return std::floor(rng_.uniform(lo, hi + 1.0)); }
  double lognormal(double median, double sigma) {
    return std::floor(median * std::exp(sigma * rng_.normal()));
  }
  bool chance(double p) { return rng_.uniform() < p; }
  const std::string& pick(const std::vector<std::string>& v) { return v[rng_.uniform_index(v.size())]; }

  kdd::Record normal() {
    const double u = rng_.uniform();
    kdd::Record r;
    if (u < 0.62) {
      r = start("tcp", "http", "SF", "normal");
      set(r, kSrcBytes, lognormal(230, 0.3));
      set(r, kDstBytes, lognormal(3000, 1.0));
      set(r, kLoggedIn, 1);
    } else if (u < 0.72) {
      r = start("tcp", "smtp", "SF", "normal");
      set(r, kSrcBytes, lognormal(1000, 0.8));
      set(r, kDstBytes, lognormal(330, 0.2));
      set(r, kLoggedIn, 1);
    } else if (u < 0.79) {
      r = start("tcp", "ftp_data", "SF", "normal");
      set(r, kSrcBytes, lognormal(1500, 1.5));
      set(r, kLoggedIn, 1);
    } else if (u < 0.85) {
      r = start("udp", "domain_u", "SF", "normal");
      set(r, kSrcBytes, integer(30, 50));
      set(r, kDstBytes, integer(60, 120));
    } else if (u < 0.90) {
      r = start("udp", "private", "SF", "normal");
      set(r, kSrcBytes, integer(20, 150));
      set(r, kDstBytes, integer(20, 150));
    } else if (u < 0.92) {
      r = start("icmp", "ecr_i", "SF", "normal");
      set(r, kSrcBytes, integer(8, 1480));
    } else if (u < 0.95) {
      r = start("tcp", "ftp", "SF", "normal");
      set(r, kDuration, integer(0, 300));
      set(r, kSrcBytes, lognormal(200, 0.5));
      set(r, kDstBytes, lognormal(600, 0.5));
      set(r, kLoggedIn, 1);
    } else if (u < 0.97) {
      r = start("tcp", "telnet", "SF", "normal");
      set(r, kDuration, integer(1, 3000));
      set(r, kSrcBytes, lognormal(400, 1.0));
      set(r, kDstBytes, lognormal(2000, 1.0));
      set(r, kLoggedIn, 1);
      if (chance(0.05)) set(r, kHot, integer(1, 3));
    } else {
      static const std::vector<std::string> other = {"finger", "auth", "pop_3", "IRC", "X11", "time"};
      r = start("tcp", pick(other), "SF", "normal");
      set(r, kSrcBytes, lognormal(100, 1.0));
      set(r, kDstBytes, lognormal(200, 1.0));
      set(r, kLoggedIn, chance(0.5) ? 1 : 0);
    }
    if (chance(0.05)) set(r, kDuration, lognormal(60, 1.0));
    if (r.protocol_type == "tcp" && chance(0.01)) {
      r.flag = chance(0.5) ? "REJ" : "S0";
      set(r, kSrcBytes, 0);
      set(r, kDstBytes, 0);
      set(r, kLoggedIn, 0);
    }
    const double count = std::min(511.0, std::floor(1 + 12 * -std::log(1 - rng_.uniform())));
    set(r, kCount, count);
    set(r, kSrvCount, std::min(511.0, count + integer(0, 10)));
    if (chance(0.05)) rate(r, kSerror, 0.01, 0.1);
    if (chance(0.05)) rate(r, kRerror, 0.01, 0.2);
    if (chance(0.9)) set(r, kSameSrv, 1.0); else rate(r, kSameSrv, 0.3, 1.0);
    if (chance(0.1)) rate(r, kDiffSrv, 0.0, 0.3);
    if (chance(0.3)) rate(r, kSrvDiffHost, 0.0, 0.3);
    set(r, kDstHostCount, integer(1, 255));
    if (chance(0.6)) set(r, kDstHostSrvCount, 255); else set(r, kDstHostSrvCount, integer(1, 255));
    if (chance(0.6)) set(r, kDhSameSrv, 1.0); else rate(r, kDhSameSrv, 0.2, 1.0);
    rate(r, kDhDiffSrv, 0.0, 0.05);
    if (chance(0.1)) set(r, kDhSameSrcPort, 1.0); else rate(r, kDhSameSrcPort, 0.0, 0.1);
    rate(r, kDhSrvDiffHost, 0.0, 0.05);
    if (chance(0.03)) rate(r, kDhSerror, 0.0, 0.1);
    if (chance(0.03)) rate(r, kDhRerror, 0.0, 0.1);
    return r;
  }

  kdd::Record attack(const std::string& label) {
    kdd::Record r;
    if (label == "smurf") {
      r = start("icmp", "ecr_i", "SF", label);
      set(r, kSrcBytes, chance(0.9) ? 1032 : 520);
      const double count = chance(0.8) ? 511 : integer(200, 511);
      set(r, kCount, count);
      set(r, kSrvCount, count);
      set(r, kSameSrv, 1.0);
      set(r, kDstHostCount, 255);
      set(r, kDstHostSrvCount, 255);
      set(r, kDhSameSrv, 1.0);
      set(r, kDhSameSrcPort, 1.0);
    } else if (label == "neptune") {
      const bool rej = chance(0.1);
      r = start("tcp", chance(0.6) ? std::string("private") : pick(kTcpServices), rej ? "REJ" : "S0", label);
      set(r, kCount, integer(100, 300));
      set(r, kSrvCount, integer(1, 25));
      set(r, rej ? kRerror : kSerror, 1.0);
      set(r, rej ? kSrvRerror : kSrvSerror, 1.0);
      rate(r, kSameSrv, 0.01, 0.1);
      rate(r, kDiffSrv, 0.05, 0.08);
      set(r, kDstHostCount, 255);
      set(r, kDstHostSrvCount, integer(1, 25));
      rate(r, kDhSameSrv, 0.0, 0.1);
      rate(r, kDhDiffSrv, 0.05, 0.08);
      set(r, rej ? kDhRerror : kDhSerror, 1.0);
      set(r, rej ? kDhSrvRerror : kDhSrvSerror, 1.0);
    } else if (label == "back") {
      r = start("tcp", "http", "SF", label);
      set(r, kSrcBytes, 54540);
      set(r, kDstBytes, integer(7300, 8315));
      set(r, kHot, 2);
      set(r, kLoggedIn, 1);
      set(r, kCount, integer(1, 10));
      set(r, kSrvCount, integer(1, 10));
      set(r, kSameSrv, 1.0);
      set(r, kDstHostCount, integer(1, 255));
      set(r, kDstHostSrvCount, integer(1, 255));
      rate(r, kDhSameSrv, 0.5, 1.0);
    } else if (label == "teardrop") {
      r = start("udp", "private", "SF", label);
      set(r, kSrcBytes, 28);
      set(r, kWrongFragment, 3);
      set(r, kCount, integer(1, 100));
      set(r, kSrvCount, integer(1, 100));
      set(r, kSameSrv, 1.0);
      set(r, kDstHostCount, integer(50, 255));
      set(r, kDstHostSrvCount, integer(1, 100));
      rate(r, kDhSameSrv, 0.1, 1.0);
    } else if (label == "pod") {
      r = start("icmp", "ecr_i", "SF", label);
      set(r, kSrcBytes, 1480);
      set(r, kWrongFragment, 1);
      set(r, kCount, integer(1, 5));
      set(r, kSrvCount, integer(1, 5));
      set(r, kSameSrv, 1.0);
      set(r, kDstHostCount, integer(1, 255));
      set(r, kDstHostSrvCount, integer(1, 255));
      rate(r, kDhSameSrv, 0.5, 1.0);
    } else if (label == "land") {
      r = start("tcp", chance(0.5) ? "finger" : "telnet", "S0", label);
      set(r, kLand, 1);
      set(r, kCount, 1);
      set(r, kSrvCount, 1);
      set(r, kSerror, 1.0);
      set(r, kSrvSerror, 1.0);
      set(r, kSameSrv, 1.0);
      set(r, kDstHostCount, integer(1, 255));
      set(r, kDstHostSrvCount, integer(1, 3));
      set(r, kDhSerror, 1.0);
    } else if (label == "satan") {
      const double u = rng_.uniform();
      r = start("tcp", pick(kTcpServices), u < 0.5 ? "REJ" : (u < 0.7 ? "S0" : "SF"), label);
      set(r, kSrcBytes, integer(0, 50));
      set(r, kCount, integer(1, 10));
      set(r, kSrvCount, integer(1, 3));
      rate(r, kRerror, 0.5, 1.0);
      rate(r, kSrvRerror, 0.5, 1.0);
      rate(r, kSameSrv, 0.0, 0.5);
      rate(r, kDiffSrv, 0.5, 1.0);
      set(r, kDstHostCount, integer(1, 255));
      set(r, kDstHostSrvCount, integer(1, 10));
      rate(r, kDhSameSrv, 0.0, 0.1);
      rate(r, kDhDiffSrv, 0.5, 1.0);
      rate(r, kDhRerror, 0.5, 1.0);
      rate(r, kDhSrvRerror, 0.5, 1.0);
    } else if (label == "ipsweep") {
      r = start("icmp", chance(0.9) ? "eco_i" : "ecr_i", "SF", label);
      set(r, kSrcBytes, chance(0.5) ? 8 : 18);
      set(r, kCount, integer(1, 5));
      set(r, kSrvCount, integer(1, 30));
      set(r, kSameSrv, 1.0);
      set(r, kSrvDiffHost, 1.0);
      set(r, kDstHostCount, integer(1, 100));
      set(r, kDstHostSrvCount, integer(1, 100));
      set(r, kDhSameSrv, 1.0);
      set(r, kDhSameSrcPort, 1.0);
      rate(r, kDhSrvDiffHost, 0.3, 1.0);
    } else if (label == "portsweep") {
      r = start("tcp", "private", chance(0.7) ? "REJ" : "RSTR", label);
      set(r, kCount, integer(1, 3));
      set(r, kSrvCount, integer(1, 3));
      rate(r, kRerror, 0.5, 1.0);
      set(r, kSrvRerror, 1.0);
      rate(r, kSameSrv, 0.5, 1.0);
      set(r, kDstHostCount, integer(1, 5));
      set(r, kDstHostSrvCount, integer(1, 2));
      rate(r, kDhSameSrv, 0.5, 1.0);
      set(r, kDhSameSrcPort, 1.0);
      rate(r, kDhRerror, 0.5, 1.0);
      set(r, kDhSrvRerror, 1.0);
    } else if (label == "nmap") {
      if (chance(0.5)) {
        r = start("icmp", "eco_i", "SF", label);
        set(r, kSrcBytes, integer(8, 18));
      } else {
        r = start("tcp", "private", chance(0.5) ? "SH" : "S0", label);
      }
      set(r, kCount, integer(1, 3));
      set(r, kSrvCount, integer(1, 3));
      rate(r, kSameSrv, 0.5, 1.0);
      set(r, kDstHostCount, integer(1, 50));
      set(r, kDstHostSrvCount, integer(1, 50));
      rate(r, kDhDiffSrv, 0.0, 0.5);
      set(r, kDhSameSrcPort, 1.0);
      set(r, kDhSrvDiffHost, 1.0);
    } else {
      r = intrusion(label);
    }
    return r;
  }

  // R2L and U2R sessions: logged-in interactive or file-transfer traffic.
  kdd::Record intrusion(const std::string& label) {
    kdd::Record r;
    if (label == "warezclient") {
      r = start("tcp", chance(0.5) ? "ftp_data" : "ftp", "SF", label);
      set(r, kDuration, integer(0, 1000));
      set(r, kSrcBytes, lognormal(5000, 2.0));
      set(r, kHot, integer(0, 28));
      set(r, kGuestLogin, r.service == "ftp" ? 1 : 0);
    } else if (label == "guess_passwd") {
      r = start("tcp", "telnet", chance(0.7) ? "RSTO" : "SF", label);
      set(r, kSrcBytes, integer(125, 126));
      set(r, kDstBytes, integer(179, 180));
      set(r, kFailedLogins, 1);
      set(r, kLoggedIn, 0);
      set(r, kCount, 1);
      set(r, kSrvCount, 1);
      set(r, kSameSrv, 1.0);
      set(r, kDstHostCount, integer(1, 255));
      set(r, kDstHostSrvCount, integer(1, 255));
      rate(r, kDhRerror, 0.0, 1.0);
      return r;
    } else if (label == "warezmaster") {
      r = start("tcp", "ftp", "SF", label);
      set(r, kDuration, integer(10, 20000));
      set(r, kSrcBytes, integer(0, 300));
      set(r, kDstBytes, integer(1000000, 5000000));
      set(r, kHot, integer(20, 30));
      set(r, kGuestLogin, 1);
    } else if (label == "imap") {
      r = start("tcp", "imap4", chance(0.5) ? "SH" : "SF", label);
      set(r, kSrcBytes, integer(0, 1500));
      set(r, kCount, integer(1, 10));
      set(r, kSrvCount, integer(1, 10));
      set(r, kDstHostCount, integer(1, 10));
      set(r, kDstHostSrvCount, integer(1, 10));
      return r;
    } else if (label == "ftp_write") {
      r = start("tcp", chance(0.5) ? "ftp" : "ftp_data", "SF", label);
      set(r, kSrcBytes, integer(100, 700));
      set(r, kHot, integer(1, 2));
    } else if (label == "multihop") {
      r = start("tcp", chance(0.5) ? "telnet" : "ftp_data", "SF", label);
      set(r, kDuration, integer(10, 2000));
      set(r, kSrcBytes, integer(1000, 3000));
      set(r, kDstBytes, integer(1000, 30000));
      set(r, kHot, integer(1, 5));
    } else if (label == "phf") {
      r = start("tcp", "http", "SF", label);
      set(r, kSrcBytes, 51);
      set(r, kDstBytes, 8127);
      set(r, kHot, 2);
    } else if (label == "spy") {
      r = start("tcp", "telnet", "SF", label);
      set(r, kDuration, integer(20000, 25000));
      set(r, kSrcBytes, integer(1000, 1500));
      set(r, kDstBytes, integer(18000, 22000));
    } else if (label == "buffer_overflow" || label == "loadmodule" || label == "perl" ||
               label == "rootkit") {
      r = start("tcp", label == "rootkit" && chance(0.5) ? "ftp_data" : "telnet", "SF", label);
      set(r, kDuration, integer(10, 200));
      set(r, kSrcBytes, integer(1500, 3000));
      set(r, kDstBytes, integer(2000, 10000));
      set(r, kHot, integer(1, 4));
      set(r, kRootShell, label == "rootkit" ? (chance(0.5) ? 1 : 0) : 1);
      set(r, kFileCreations, integer(0, 2));
      set(r, kCompromised, integer(0, 3));
      if (label == "perl") set(r, kNumRoot, integer(1, 3));
    } else {
      throw std::invalid_argument("no synthetic prototype for label " + label);
    }
    set(r, kLoggedIn, 1);
    set(r, kCount, integer(1, 3));
    set(r, kSrvCount, integer(1, 3));
    set(r, kSameSrv, 1.0);
    set(r, kDstHostCount, integer(1, 50));
    set(r, kDstHostSrvCount, integer(1, 50));
    rate(r, kDhSameSrv, 0.2, 1.0);
    rate(r, kDhSameSrcPort, 0.0, 0.5);
    return r;
  }

 private:
  Rng& rng_;
};

}  // namespace

const std::vector<std::pair<std::string, std::size_t>>& kdd10_label_counts() {
  static const std::vector<std::pair<std::string, std::size_t>> counts = {
      {"smurf", 280790},      {"neptune", 107201}, {"normal", 97278},   {"back", 2203},
      {"satan", 1589},        {"ipsweep", 1247},   {"portsweep", 1040}, {"warezclient", 1020},
      {"teardrop", 979},      {"pod", 264},        {"nmap", 231},       {"guess_passwd", 53},
      {"buffer_overflow", 30}, {"land", 21},       {"warezmaster", 20}, {"imap", 12},
      {"rootkit", 10},        {"loadmodule", 9},   {"ftp_write", 8},    {"multihop", 7},
      {"phf", 4},             {"perl", 3},         {"spy", 2}};
  return counts;
}

std::string synthetic_kdd_text(double scale, std::uint64_t seed) {
  std::vector<std::string> labels;
  for (const auto& [label, count] : kdd10_label_counts()) {
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(scale * count)));
    labels.insert(labels.end(), n, label);
  }
  Rng rng(seed);
  rng.shuffle(labels);
  Builder builder(rng);
  std::string text;
  text.reserve(labels.size() * 120);
  for (const auto& label : labels) {
    text += kdd::to_line(label == "normal" ? builder.normal() : builder.attack(label));
    text.push_back('\n');
  }
  return text;
}

void write_synthetic_kdd(const std::string& path, double scale, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << synthetic_kdd_text(scale, seed);
}

}  // namespace iotad::testkit
