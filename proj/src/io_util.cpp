#include "scenegeo/io_util.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "scenegeo/errors.hpp"

namespace scenegeo {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  write_text(j.dump(2) + "\n", path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

const char* to_string(ProtocolFailure kind) {
  switch (kind) {
    case ProtocolFailure::NonzeroExit: return "nonzero exit";
    case ProtocolFailure::Timeout: return "timeout";
    case ProtocolFailure::MissingOutput: return "missing output";
    case ProtocolFailure::MalformedOutput: return "malformed output";
    case ProtocolFailure::ShapeMismatch: return "shape mismatch";
    case ProtocolFailure::NotDense: return "non-dense output";
    case ProtocolFailure::LaunchFailed: return "launch failed";
  }
  return "protocol error";
}

}  // namespace scenegeo
