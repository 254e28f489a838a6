// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/core/archive.h"

#include <cstring>
#include <fstream>

#include "asvlab/core/error.h"

namespace asvlab {

namespace {
constexpr char kMagic[8] = {'A', 'S', 'V', 'L', 'A', 'B', 'K', '1'};
}

ArchiveWriter::ArchiveWriter(std::string schema, nlohmann::json meta)
    : schema_(std::move(schema)), meta_(std::move(meta)) {}

void ArchiveWriter::AddTensor(const std::string& name, const Eigen::MatrixXf& t) {
  tensors_.emplace_back(name, t);
}

void ArchiveWriter::AddTensor(const std::string& name, const Eigen::VectorXf& t) {
  Eigen::MatrixXf m(t.size(), 1);
  m.col(0) = t;
  tensors_.emplace_back(name, m);
}

void ArchiveWriter::Save(const std::string& path) const {
  nlohmann::json header;
  header["schema"] = schema_;
  header["meta"] = meta_;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : tensors_) {
    header["tensors"].push_back(
        {{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  }
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  os.write(kMagic, 8);
  const uint64_t len = header_str.size();
  os.write(reinterpret_cast<const char*>(&len), 8);
  os.write(header_str.data(), static_cast<std::streamsize>(len));
  for (const auto& [name, t] : tensors_) {
    // Eigen is column-major; dump as-is and restore with the same layout.
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(sizeof(float) * t.size()));
  }
  if (!os) throw Error(ErrorKind::kIo, "failed writing " + path);
}

ArchiveReader ArchiveReader::Load(const std::string& path,
                                  const std::string& expected_schema) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw Error(ErrorKind::kFormat, "not an asvlab checkpoint: " + path);
  uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 8);
  std::string header_str(len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!is) throw Error(ErrorKind::kFormat, "truncated checkpoint: " + path);

  nlohmann::json header = nlohmann::json::parse(header_str, nullptr, false);
  if (header.is_discarded())
    throw Error(ErrorKind::kFormat, "bad checkpoint header: " + path);

  ArchiveReader r;
  r.schema_ = header.value("schema", "");
  if (!expected_schema.empty() && r.schema_ != expected_schema)
    throw Error(ErrorKind::kState, "checkpoint schema '" + r.schema_ +
                                       "' != expected '" + expected_schema + "'");
  r.meta_ = header.value("meta", nlohmann::json::object());
  for (const auto& td : header["tensors"]) {
    const std::string name = td["name"];
    Eigen::MatrixXf t(td["rows"].get<Eigen::Index>(),
                      td["cols"].get<Eigen::Index>());
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(float) * t.size()));
    if (!is) throw Error(ErrorKind::kFormat, "truncated tensor " + name);
    r.tensors_.emplace(name, std::move(t));
  }
  return r;
}

bool ArchiveReader::HasTensor(const std::string& name) const {
  return tensors_.count(name) > 0;
}

const Eigen::MatrixXf& ArchiveReader::Tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw Error(ErrorKind::kLookup, "no tensor '" + name + "' in checkpoint");
  return it->second;
}

Eigen::VectorXf ArchiveReader::TensorVec(const std::string& name) const {
  const Eigen::MatrixXf& m = Tensor(name);
  if (m.cols() != 1)
    throw Error(ErrorKind::kShape, "tensor '" + name + "' is not a vector");
  return m.col(0);
}

}  // namespace asvlab
