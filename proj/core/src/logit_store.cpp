#include "asckit/logit_store.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace asckit {

void TeacherLogitStore::add(const std::string& teacher_id,
                            const std::string& clip_id,
                            const std::array<float, kNumClasses>& logits) {
  teachers_[teacher_id][clip_id] = logits;
}

bool TeacherLogitStore::has_teacher(const std::string& teacher_id) const {
  return teachers_.count(teacher_id) > 0;
}

std::vector<std::string> TeacherLogitStore::teacher_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : teachers_) {
    if (id != kEnsembleId) out.push_back(id);
  }
  return out;
}

const std::map<std::string, std::array<float, kNumClasses>>&
TeacherLogitStore::teacher(const std::string& teacher_id) const {
  auto it = teachers_.find(teacher_id);
  if (it == teachers_.end()) {
    throw validation_error("logit store: no teacher '" + teacher_id + "'");
  }
  return it->second;
}

const std::map<std::string, std::array<float, kNumClasses>>&
TeacherLogitStore::ensemble() {
  const auto ids = teacher_ids();
  if (ids.empty()) throw validation_error("logit store: no teachers registered");

  const auto& first = teachers_.at(ids[0]);
  for (const auto& id : ids) {
    const auto& t = teachers_.at(id);
    if (t.size() != first.size()) {
      throw validation_error("logit store: clip coverage mismatch between teachers '" +
                             ids[0] + "' and '" + id + "'");
    }
    for (const auto& [clip, _] : first) {
      if (!t.count(clip)) {
        throw validation_error("logit store: teacher '" + id +
                               "' is missing clip '" + clip + "'");
      }
    }
  }

  std::map<std::string, std::array<float, kNumClasses>> mean;
  for (const auto& [clip, _] : first) {
    std::array<double, kNumClasses> acc{};
    for (const auto& id : ids) {
      const auto& v = teachers_.at(id).at(clip);
      for (int c = 0; c < kNumClasses; ++c) acc[static_cast<size_t>(c)] += v[static_cast<size_t>(c)];
    }
    std::array<float, kNumClasses> out{};
    for (int c = 0; c < kNumClasses; ++c) {
      out[static_cast<size_t>(c)] =
          static_cast<float>(acc[static_cast<size_t>(c)] / static_cast<double>(ids.size()));
    }
    mean[clip] = out;
  }
  teachers_[kEnsembleId] = std::move(mean);
  return teachers_.at(kEnsembleId);
}

std::array<float, kNumClasses> TeacherLogitStore::lookup(
    const std::string& teacher_id, const std::string& clip_id) const {
  const auto& t = teacher(teacher_id);
  auto it = t.find(clip_id);
  if (it == t.end()) {
    throw validation_error("logit store: teacher '" + teacher_id +
                           "' has no logits for clip '" + clip_id + "'");
  }
  return it->second;
}

void TeacherLogitStore::require_coverage(
    const std::string& teacher_id, const std::vector<std::string>& clips) const {
  const auto& t = teacher(teacher_id);
  for (const auto& clip : clips) {
    if (!t.count(clip)) {
      throw validation_error("logit store: teacher '" + teacher_id +
                             "' does not cover clip '" + clip + "'");
    }
  }
}

void TeacherLogitStore::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw validation_error("cannot write logit store: " + path);
  f << "clip_id,teacher_id";
  for (int c = 0; c < kNumClasses; ++c) f << ",l" << c;
  f << '\n';
  char buf[64];
  for (const auto& [teacher_id, clips] : teachers_) {
    for (const auto& [clip_id, logits] : clips) {
      f << clip_id << ',' << teacher_id;
      for (int c = 0; c < kNumClasses; ++c) {
        // %.9g round-trips float32 exactly.
        std::snprintf(buf, sizeof(buf), "%.9g",
                      static_cast<double>(logits[static_cast<size_t>(c)]));
        f << ',' << buf;
      }
      f << '\n';
    }
  }
}

TeacherLogitStore TeacherLogitStore::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw validation_error("logit store not found: " + path);
  std::string line;
  if (!std::getline(f, line)) throw validation_error("logit store is empty: " + path);

  TeacherLogitStore store;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string clip, teacher, field;
    if (!std::getline(ss, clip, ',') || !std::getline(ss, teacher, ',')) {
      throw validation_error("logit store: bad row at line " + std::to_string(line_no));
    }
    std::array<float, kNumClasses> logits{};
    for (int c = 0; c < kNumClasses; ++c) {
      if (!std::getline(ss, field, ',')) {
        throw validation_error("logit store: row too short at line " +
                               std::to_string(line_no));
      }
      logits[static_cast<size_t>(c)] = std::strtof(field.c_str(), nullptr);
    }
    store.add(teacher, clip, logits);
  }
  return store;
}

}  // namespace asckit
