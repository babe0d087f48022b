#include "starmine/manifest.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "starmine/types.hpp"

namespace starmine {

namespace {

struct DigestCtx {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free};
  DigestCtx() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256: digest init failed");
  }
  void update(const char *data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1)
      throw std::runtime_error("sha256: digest update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1)
      throw std::runtime_error("sha256: digest final failed");
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (unsigned i = 0; i < len; ++i)
      out << std::setw(2) << static_cast<int>(md[i]);
    return out.str();
  }
};

} // namespace

std::string sha256_hex(const std::string &bytes) {
  DigestCtx d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot read " + path);
  DigestCtx d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad())
    throw InputError("read error on " + path);
  return d.hex();
}

std::string to_json(const RunManifest &m) {
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["command"] = m.command;
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto &[role, digest] : m.inputs)
    j["inputs"][role] = {{"sha256", digest}};
  j["algorithm"] = m.algorithm;
  j["gain"] = m.gain;
  j["tie_break"] = m.tie_break;
  j["attribute_order"] = m.attribute_order;
  return j.dump(2);
}

void write_manifest(const RunManifest &m, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot write " + path);
  out << to_json(m) << '\n';
}

} // namespace starmine
