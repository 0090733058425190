#pragma once

// Umbrella header: subspace decompositions of column-matched data blocks
// into common, distinct, distinct-orthogonal and distinct-non-orthogonal
// parts, six fusion methods on top of one shared subspace algebra, and
// the synthetic generator used to benchmark recovery.

#include "cdfuse/block.hpp"
#include "cdfuse/compare.hpp"
#include "cdfuse/csv.hpp"
#include "cdfuse/datagen.hpp"
#include "cdfuse/disco.hpp"
#include "cdfuse/errors.hpp"
#include "cdfuse/gca.hpp"
#include "cdfuse/gsvd.hpp"
#include "cdfuse/jive.hpp"
#include "cdfuse/linalg.hpp"
#include "cdfuse/o2pls.hpp"
#include "cdfuse/parallel.hpp"
#include "cdfuse/preprocess.hpp"
#include "cdfuse/report.hpp"
#include "cdfuse/sca.hpp"
#include "cdfuse/srdf.hpp"
#include "cdfuse/subspace.hpp"
