#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "asckit/common.hpp"

namespace asckit {

// Persistent map teacher_id -> (clip_id -> 10-class logits). The arithmetic
// mean over all registered teachers is stored/served under "__ensemble__".
class TeacherLogitStore {
 public:
  static constexpr const char* kEnsembleId = "__ensemble__";

  void add(const std::string& teacher_id, const std::string& clip_id,
           const std::array<float, kNumClasses>& logits);

  bool has_teacher(const std::string& teacher_id) const;
  std::vector<std::string> teacher_ids() const;  // excludes the ensemble

  const std::map<std::string, std::array<float, kNumClasses>>& teacher(
      const std::string& teacher_id) const;

  // Elementwise mean over all registered teachers, computed per clip.
  // Throws if teachers cover different clip sets. The result is cached into
  // the store under kEnsembleId.
  const std::map<std::string, std::array<float, kNumClasses>>& ensemble();

  // Logits for one clip from one teacher (commonly kEnsembleId).
  std::array<float, kNumClasses> lookup(const std::string& teacher_id,
                                        const std::string& clip_id) const;

  // Every clip id present for teacher_id must cover `clips`.
  void require_coverage(const std::string& teacher_id,
                        const std::vector<std::string>& clips) const;

  // CSV with header clip_id,teacher_id,l0,...,l9 (float32 round-trippable).
  void save(const std::string& path) const;
  static TeacherLogitStore load(const std::string& path);

 private:
  std::map<std::string, std::map<std::string, std::array<float, kNumClasses>>> teachers_;
};

}  // namespace asckit
