// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "mtvae/seqnet.hpp"

namespace mtvae {

struct RenderOptions {
  double frame_px = 160.0;  // square canvas per frame
  double point_radius = 3.0;
  bool trajectory = true;  // fade in the per-joint path up to each frame
};

/// One SVG per frame: joints of a 2D keypoint sequence (D = 2J) drawn as
/// dots with an optional trailing trajectory. Coordinates are assumed
/// normalized to [-1, 1].
void render_frames(const MotionSequence& seq, const std::string& out_dir, const RenderOptions& opt = {});

/// All frames side by side in a single filmstrip SVG.
void render_strip(const MotionSequence& seq, const std::string& out_path, const RenderOptions& opt = {});

}  // namespace mtvae
