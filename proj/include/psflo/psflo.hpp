#pragma once

// Umbrella header for the PSF-LO library.

#include "psflo/clustering.hpp"
#include "psflo/config.hpp"
#include "psflo/cp_forms.hpp"
#include "psflo/errors.hpp"
#include "psflo/evaluation.hpp"
#include "psflo/gef.hpp"
#include "psflo/gef_matching.hpp"
#include "psflo/hmm.hpp"
#include "psflo/kdtree.hpp"
#include "psflo/kitti_io.hpp"
#include "psflo/pipeline.hpp"
#include "psflo/plot.hpp"
#include "psflo/point_cloud.hpp"
#include "psflo/psf.hpp"
#include "psflo/psf_extraction.hpp"
#include "psflo/psf_matching.hpp"
#include "psflo/ransac.hpp"
#include "psflo/residuals.hpp"
#include "psflo/se3.hpp"
#include "psflo/solver.hpp"
#include "psflo/synthetic.hpp"
#include "psflo/tracking.hpp"
#include "psflo/velocity.hpp"
