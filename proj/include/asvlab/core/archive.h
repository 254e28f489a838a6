// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORE_ARCHIVE_H_
#define ASVLAB_CORE_ARCHIVE_H_

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace asvlab {

// Single-file checkpoint container: a JSON metadata block plus named float32
// tensors, written little-endian. Every model checkpoint in the project
// (ASV, NRS, detector) uses this format with its own schema id.
class ArchiveWriter {
 public:
  ArchiveWriter(std::string schema, nlohmann::json meta);

  void AddTensor(const std::string& name, const Eigen::MatrixXf& t);
  void AddTensor(const std::string& name, const Eigen::VectorXf& t);

  void Save(const std::string& path) const;

 private:
  std::string schema_;
  nlohmann::json meta_;
  std::vector<std::pair<std::string, Eigen::MatrixXf>> tensors_;
};

class ArchiveReader {
 public:
  // Throws a format error on bad magic and a state error on schema mismatch.
  static ArchiveReader Load(const std::string& path,
                            const std::string& expected_schema);

  const nlohmann::json& meta() const { return meta_; }
  const std::string& schema() const { return schema_; }

  bool HasTensor(const std::string& name) const;
  const Eigen::MatrixXf& Tensor(const std::string& name) const;
  Eigen::VectorXf TensorVec(const std::string& name) const;

 private:
  std::string schema_;
  nlohmann::json meta_;
  std::map<std::string, Eigen::MatrixXf> tensors_;
};

}  // namespace asvlab

#endif  // ASVLAB_CORE_ARCHIVE_H_
