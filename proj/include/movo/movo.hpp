#ifndef MOVO_MOVO_HPP
#define MOVO_MOVO_HPP

#include "movo/crf.hpp"
#include "movo/datasets.hpp"
#include "movo/evaluate.hpp"
#include "movo/features.hpp"
#include "movo/geometry.hpp"
#include "movo/image.hpp"
#include "movo/odometry.hpp"
#include "movo/synth.hpp"

#endif  // MOVO_MOVO_HPP
