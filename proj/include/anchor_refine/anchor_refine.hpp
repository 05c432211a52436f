#pragma once

// Everything except the HTTP client, which pulls in cpp-httplib; include
// "anchor_refine/http_backend.hpp" separately when needed.

#include "anchor_refine/ablation.hpp"
#include "anchor_refine/anchors.hpp"
#include "anchor_refine/config.hpp"
#include "anchor_refine/dataset.hpp"
#include "anchor_refine/entropy.hpp"
#include "anchor_refine/error.hpp"
#include "anchor_refine/fusion.hpp"
#include "anchor_refine/io.hpp"
#include "anchor_refine/manifest.hpp"
#include "anchor_refine/metrics.hpp"
#include "anchor_refine/rle.hpp"
#include "anchor_refine/scene.hpp"
#include "anchor_refine/segmenter.hpp"
#include "anchor_refine/synth.hpp"
#include "anchor_refine/tensor.hpp"
