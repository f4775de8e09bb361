// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "compvol/analysis.hpp"
#include "compvol/error.hpp"
#include "compvol/frame.hpp"
#include "compvol/image.hpp"
#include "compvol/image_io.hpp"
#include "compvol/lifting.hpp"
#include "compvol/maskrender.hpp"
#include "compvol/parallel.hpp"
#include "compvol/part_io.hpp"
#include "compvol/part_model.hpp"
#include "compvol/raycam.hpp"
#include "compvol/renderer.hpp"
