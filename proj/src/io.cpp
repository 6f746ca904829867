#include "skewtensor/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace skewtensor {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'V', 'D'};
constexpr unsigned char kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = v << 8 | p[i];
  return v;
}

std::string read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw value_error("cannot open file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw value_error("error reading file: " + path);
  return bytes;
}

}  // namespace

std::string read_text_file(const std::string& path) { return read_binary(path); }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw value_error("cannot open file for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw value_error("error writing file: " + path);
}

std::vector<Tensor> read_dataset(const std::string& path) {
  const std::string bytes = read_binary(path);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t len = bytes.size();
  const auto truncated = [&](uint64_t expected) {
    return value_error("dataset file truncated: expected " +
                       std::to_string(expected) + " bytes, found " +
                       std::to_string(len) + ": " + path);
  };
  if (len < 9) throw truncated(9);
  if (std::memcmp(p, kMagic, 4) != 0)
    throw value_error("not a dataset file (bad magic): " + path);
  if (p[4] != kVersion)
    throw value_error("unsupported dataset version " + std::to_string(p[4]) +
                      ": " + path);
  size_t pos = 5;
  const uint32_t order = get_u32(p + pos);
  pos += 4;
  if (order < 1 || order > 8)
    throw value_error("dataset order out of range: " + path);
  if (len < pos + 4ull * order + 8) throw truncated(pos + 4ull * order + 8);
  std::vector<int> dims(order);
  long long n_star = 1;
  for (uint32_t d = 0; d < order; ++d) {
    const uint32_t nd = get_u32(p + pos);
    pos += 4;
    if (nd < 1 || nd > (1u << 20))
      throw value_error("dataset dim out of range: " + path);
    dims[d] = static_cast<int>(nd);
    n_star *= nd;
  }
  const uint64_t count = get_u64(p + pos);
  pos += 8;
  const uint64_t want =
      pos + count * static_cast<uint64_t>(n_star) * 8;
  if (len < want) throw value_error("dataset file truncated: " + path);
  if (len > want) throw value_error("dataset file has trailing bytes: " + path);
  std::vector<Tensor> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    Vector v(n_star);
    for (long long e = 0; e < n_star; ++e) {
      v[e] = std::bit_cast<double>(get_u64(p + pos));
      pos += 8;
    }
    out.emplace_back(dims, std::move(v));
  }
  return out;
}

void write_dataset(const std::string& path, const std::vector<Tensor>& xs) {
  if (xs.empty()) throw value_error("refusing to write an empty dataset");
  for (const Tensor& x : xs)
    if (!x.same_dims(xs[0]))
      throw value_error("dataset observations have mixed dims");
  std::string bytes;
  bytes.reserve(32 + xs.size() * static_cast<size_t>(xs[0].size()) * 8);
  bytes.append(kMagic, 4);
  bytes.push_back(static_cast<char>(kVersion));
  put_u32(bytes, static_cast<uint32_t>(xs[0].order()));
  for (int d = 0; d < xs[0].order(); ++d)
    put_u32(bytes, static_cast<uint32_t>(xs[0].dim(d)));
  put_u64(bytes, xs.size());
  for (const Tensor& x : xs)
    for (long long e = 0; e < x.size(); ++e)
      put_u64(bytes, std::bit_cast<uint64_t>(x[e]));
  write_text_file(path, bytes);
}

Tensor read_ppm(const std::string& path) {
  const std::string bytes = read_binary(path);
  size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      const unsigned char ch = static_cast<unsigned char>(bytes[pos]);
      if (ch == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(ch)) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&]() -> std::string {
    skip_space();
    const size_t start = pos;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos])))
      ++pos;
    if (start == pos) throw value_error("malformed ppm header: " + path);
    return bytes.substr(start, pos - start);
  };
  auto number = [&](const char* what) -> long {
    const std::string t = token();
    for (char ch : t)
      if (!std::isdigit(static_cast<unsigned char>(ch)))
        throw value_error(std::string("bad ppm ") + what + ": " + path);
    return std::stol(t);
  };
  if (token() != "P6") throw value_error("not a binary ppm (want P6): " + path);
  const long width = number("width");
  const long height = number("height");
  const long maxval = number("maxval");
  if (width < 1 || height < 1)
    throw value_error("bad ppm dimensions: " + path);
  if (maxval != 255)
    throw value_error("unsupported ppm maxval (want 255): " + path);
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw value_error("malformed ppm header: " + path);
  ++pos;  // the single whitespace byte before the raster
  const size_t need = static_cast<size_t>(width) * height * 3;
  if (bytes.size() - pos < need) throw value_error("ppm raster truncated: " + path);
  if (bytes.size() - pos > need)
    throw value_error("ppm raster has trailing bytes: " + path);
  Tensor t({static_cast<int>(height), static_cast<int>(width), 3});
  for (size_t e = 0; e < need; ++e)
    t[static_cast<long long>(e)] =
        static_cast<unsigned char>(bytes[pos + e]) / 255.0;
  return t;
}

std::vector<Tensor> read_dataset_any(const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_directory(fs::path(path), ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.path().extension() == ".ppm") files.push_back(entry.path());
    if (files.empty())
      throw value_error("directory has no .ppm files: " + path);
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                return a.filename().string() < b.filename().string();
              });
    std::vector<Tensor> out;
    out.reserve(files.size());
    for (const fs::path& f : files) {
      out.push_back(read_ppm(f.string()));
      if (!out.back().same_dims(out.front()))
        throw value_error("ppm sizes differ in directory: " + path);
    }
    return out;
  }
  if (fs::path(path).extension() == ".ppm") return {read_ppm(path)};
  return read_dataset(path);
}

}  // namespace skewtensor
