#include "tsb/cache.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tsb/csvio.hpp"

namespace tsb {

namespace {

constexpr const char* kCacheVersion = "tsb-cache-1";

const char* kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

// doubles are stored as little-endian bytes so reloads are bit identical
std::string encode_doubles(const double* p, size_t n) {
  std::string bytes(n * sizeof(double), '\0');
  std::memcpy(bytes.data(), p, bytes.size());
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (size_t i = 0; i < bytes.size(); i += 3) {
    unsigned v = (unsigned char)bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= (unsigned char)bytes[i + 1] << 8;
    if (i + 2 < bytes.size()) v |= (unsigned char)bytes[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < bytes.size() ? kB64[v & 63] : '=');
  }
  return out;
}

std::vector<double> decode_doubles(const std::string& s) {
  std::vector<int> rev(256, -1);
  for (int i = 0; i < 64; ++i) rev[size_t((unsigned char)kB64[i])] = i;
  std::string bytes;
  bytes.reserve(s.size() / 4 * 3);
  unsigned acc = 0;
  int bits = 0;
  for (char c : s) {
    if (c == '=') break;
    const int v = rev[size_t((unsigned char)c)];
    if (v < 0) throw InvalidInput("corrupt cache payload");
    acc = (acc << 6) | unsigned(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back(char((acc >> bits) & 0xff));
    }
  }
  if (bytes.size() % sizeof(double) != 0) throw InvalidInput("corrupt cache payload");
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::string encode_vec(const VectorXd& v) {
  return encode_doubles(v.data(), size_t(v.size()));
}

std::string encode_cvec(const VectorXcd& v) {
  return encode_doubles(reinterpret_cast<const double*>(v.data()), size_t(2 * v.size()));
}

std::string encode_cmat(const MatrixXcd& m) {
  return encode_doubles(reinterpret_cast<const double*>(m.data()), size_t(2 * m.size()));
}

VectorXd decode_vec(const std::string& s) {
  const std::vector<double> d = decode_doubles(s);
  VectorXd v(long(d.size()));
  std::memcpy(v.data(), d.data(), d.size() * sizeof(double));
  return v;
}

VectorXcd decode_cvec(const std::string& s) {
  const std::vector<double> d = decode_doubles(s);
  VectorXcd v(long(d.size() / 2));
  std::memcpy(v.data(), d.data(), d.size() * sizeof(double));
  return v;
}

MatrixXcd decode_cmat(const std::string& s, long rows, long cols) {
  const std::vector<double> d = decode_doubles(s);
  if (long(d.size()) != 2 * rows * cols) throw InvalidInput("cache matrix shape mismatch");
  MatrixXcd m(rows, cols);
  std::memcpy(m.data(), d.data(), d.size() * sizeof(double));
  return m;
}

std::string cache_file(const std::string& dir, const std::string& key) {
  return dir + "/micro_" + key + ".json";
}

}  // namespace

std::string micro_cache_key(const RunConfig& c) {
  std::ostringstream os;
  os << kCacheVersion << "\n";
  os << "lattice.a0=" << format_g17(c.a0) << "\n";
  os << "potential.micro.amplitude=" << format_g17(c.micro_amplitude) << "\n";
  os << "cutoffs.micro=" << c.micro_cutoff << "\n";
  os << "tolerances.degeneracy=" << format_g17(c.tol_degeneracy) << "\n";
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

void save_micro_cache(const std::string& dir, const RunConfig& c,
                      const DiracData& d, const ClosedFormConstants& cc) {
  nlohmann::json j;
  j["version"] = kCacheVersion;
  j["key"] = micro_cache_key(c);
  j["a0"] = format_g17(d.basis.lat.a0);
  j["cutoff"] = d.basis.cutoff;
  const double q[2] = {d.q[0], d.q[1]};
  j["q"] = encode_doubles(q, 2);
  const double scal[6] = {d.EF, d.vF, d.leakage, d.mirror_parity,
                          d.structure_residual, 0.0};
  j["scalars"] = encode_doubles(scal, 6);
  j["pair_index"] = d.pair_index;
  j["E"] = encode_vec(d.E);
  j["U"] = encode_cmat(d.U);
  j["w1"] = encode_cvec(d.w1);
  j["w2"] = encode_cvec(d.w2);
  const double cons[11] = {cc.t,   cc.tp,     cc.r,      cc.rp,       cc.s, cc.sp,
                           cc.chi, cc.gamma1, cc.gamma2, cc.vtilde_F, cc.max_imag_residual};
  j["constants"] = encode_doubles(cons, 11);
  std::ofstream out(cache_file(dir, micro_cache_key(c)), std::ios::binary);
  if (!out) throw InvalidInput("cannot write cache in " + dir);
  out << j.dump(1) << "\n";
}

std::optional<std::pair<DiracData, ClosedFormConstants>> load_micro_cache(
    const std::string& dir, const RunConfig& c) {
  const std::string path = cache_file(dir, micro_cache_key(c));
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("version").get<std::string>() != kCacheVersion) return std::nullopt;
    if (j.at("key").get<std::string>() != micro_cache_key(c)) return std::nullopt;
    DiracData d;
    d.basis.lat = build_lattice(std::stod(j.at("a0").get<std::string>()));
    d.basis.cutoff = j.at("cutoff").get<int>();
    const std::vector<double> q = decode_doubles(j.at("q").get<std::string>());
    d.q = Vector2d(q.at(0), q.at(1));
    const std::vector<double> scal = decode_doubles(j.at("scalars").get<std::string>());
    d.EF = scal.at(0);
    d.vF = scal.at(1);
    d.leakage = scal.at(2);
    d.mirror_parity = scal.at(3);
    d.structure_residual = scal.at(4);
    d.pair_index = j.at("pair_index").get<int>();
    d.E = decode_vec(j.at("E").get<std::string>());
    d.U = decode_cmat(j.at("U").get<std::string>(), d.E.size(), d.E.size());
    d.w1 = decode_cvec(j.at("w1").get<std::string>());
    d.w2 = decode_cvec(j.at("w2").get<std::string>());
    const std::vector<double> cons = decode_doubles(j.at("constants").get<std::string>());
    ClosedFormConstants cc;
    cc.t = cons.at(0);
    cc.tp = cons.at(1);
    cc.r = cons.at(2);
    cc.rp = cons.at(3);
    cc.s = cons.at(4);
    cc.sp = cons.at(5);
    cc.chi = cons.at(6);
    cc.gamma1 = cons.at(7);
    cc.gamma2 = cons.at(8);
    cc.vtilde_F = cons.at(9);
    cc.max_imag_residual = cons.at(10);
    return std::make_pair(std::move(d), cc);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace tsb
