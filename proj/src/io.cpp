#include "hpiln/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace hpiln {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw data_error(name_ + ": truncated EMB1 file");
  }

  const std::string& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void dump(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error("write failed for '" + path.string() + "'");
}

std::string format_f32(float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw numeric_error("float formatting failed");
  return std::string(buf, ptr);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void write_emb(const std::filesystem::path& path, const EmbeddingDataset& dataset) {
  dataset.validate();
  std::string buf;
  buf.reserve(12 + dataset.size() * (8 + 4 * dataset.dim));
  buf.append(kMagic, 4);
  put_u32(buf, static_cast<std::uint32_t>(dataset.size()));
  put_u32(buf, static_cast<std::uint32_t>(dataset.dim));
  for (const auto& rec : dataset.records) {
    put_u32(buf, rec.identity);
    buf.push_back(static_cast<char>(rec.modality));
    buf.push_back(static_cast<char>(rec.camera));
    buf.push_back('\0');
    buf.push_back('\0');
    for (double v : rec.vec) put_f32(buf, static_cast<float>(v));
  }
  dump(path, buf);
}

EmbeddingDataset read_emb(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  const std::string name = path.string();
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw data_error(name + ": not an EMB1 file (bad magic)");
  }
  ByteReader r(bytes, name);
  r.skip(4);
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim == 0) throw data_error(name + ": dimension must be >= 1");
  EmbeddingDataset dataset;
  dataset.dim = dim;
  dataset.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    rec.identity = r.u32();
    const std::uint8_t mod = r.u8();
    if (mod > 1) throw data_error(name + ": bad modality byte " + std::to_string(mod));
    rec.modality = static_cast<Modality>(mod);
    rec.camera = r.u8();
    r.skip(2);
    rec.vec.resize(dim);
    for (std::uint32_t k = 0; k < dim; ++k) rec.vec[k] = static_cast<double>(r.f32());
    dataset.records.push_back(std::move(rec));
  }
  if (!r.exhausted()) throw data_error(name + ": trailing bytes after last record");
  dataset.validate();
  return dataset;
}

void write_csv(const std::filesystem::path& path, const EmbeddingDataset& dataset) {
  dataset.validate();
  std::string buf = "identity,modality,camera";
  for (std::size_t k = 0; k < dataset.dim; ++k) buf += ",f" + std::to_string(k);
  buf += "\n";
  for (const auto& rec : dataset.records) {
    buf += std::to_string(rec.identity);
    buf += ",";
    buf += to_string(rec.modality);
    buf += ",";
    buf += std::to_string(rec.camera);
    for (double v : rec.vec) {
      buf += ",";
      buf += format_f32(static_cast<float>(v));
    }
    buf += "\n";
  }
  dump(path, buf);
}

EmbeddingDataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path.string() + "'");
  const std::string name = path.string();
  std::string line;
  if (!std::getline(in, line)) throw data_error(name + ": empty CSV");
  const auto header = split_line(line);
  if (header.size() < 4 || header[0] != "identity" || header[1] != "modality" ||
      header[2] != "camera") {
    throw data_error(name + ": bad CSV header");
  }
  const std::size_t dim = header.size() - 3;
  EmbeddingDataset dataset;
  dataset.dim = dim;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    if (fields.size() != dim + 3) {
      throw data_error(name + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(dim + 3) + " fields, got " + std::to_string(fields.size()));
    }
    EmbeddingRecord rec;
    try {
      rec.identity = static_cast<std::uint32_t>(std::stoul(fields[0]));
      rec.modality = modality_from_string(fields[1]);
      rec.camera = static_cast<std::uint8_t>(std::stoul(fields[2]));
      rec.vec.resize(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        float f;
        const auto& s = fields[k + 3];
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), f);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
          throw data_error("bad float '" + s + "'");
        }
        rec.vec[k] = static_cast<double>(f);
      }
    } catch (const std::exception& e) {
      throw data_error(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
    dataset.records.push_back(std::move(rec));
  }
  dataset.validate();
  return dataset;
}

EmbeddingDataset read_dataset(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_csv(path) : read_emb(path);
}

void write_dataset(const std::filesystem::path& path, const EmbeddingDataset& dataset) {
  if (path.extension() == ".csv") {
    write_csv(path, dataset);
  } else {
    write_emb(path, dataset);
  }
}

}  // namespace hpiln
