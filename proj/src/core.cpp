#include "flowtrack/core.hpp"

#include <sstream>

namespace flowtrack {

std::string ConstraintSet::label() const {
  std::string s = "out";
  if (inc) s += ",in";
  if (bal) s += ",bal";
  if (loop) s += ",loop";
  return s;
}

ConstraintSet constraint_set_from_label(const std::string& label) {
  ConstraintSet cs{true, false, false, false};
  std::stringstream ss(label);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "out" || tok.empty()) continue;
    if (tok == "in")
      cs.inc = true;
    else if (tok == "bal")
      cs.bal = true;
    else if (tok == "loop")
      cs.loop = true;
    else
      throw InvalidConstraintSet("unknown constraint token '" + tok + "'");
  }
  cs.validate();
  return cs;
}

std::vector<Violation> validate_sequence(const FrameSequence& seq) {
  std::vector<Violation> out;
  if (seq.frame_count() < 2)
    out.push_back({"sequence has fewer than 2 frames", std::nullopt});
  for (int t = 1; t <= seq.frame_count(); ++t) {
    const auto& frame = seq.frames[static_cast<size_t>(t - 1)];
    if (frame.empty()) {
      out.push_back({"frame " + std::to_string(t) + " is empty", std::nullopt});
      continue;
    }
    for (int i = 1; i <= static_cast<int>(frame.size()); ++i) {
      if (!finite(frame[static_cast<size_t>(i - 1)]))
        out.push_back({"non-finite coordinate", PointId{t, i}});
    }
  }
  return out;
}

}  // namespace flowtrack
