#pragma once

// Umbrella header: metric graphs with spin Hamiltonians (Dirac, Pauli,
// Rashba), secular-equation spectra, periodic-orbit trace formulas,
// GOE/GSE spectral statistics, and Rashba lattice localization.

#include "spingraph/core.hpp"
#include "spingraph/rng.hpp"
#include "spingraph/su2.hpp"
#include "spingraph/graph.hpp"
#include "spingraph/matching.hpp"
#include "spingraph/dirac.hpp"
#include "spingraph/pauli.hpp"
#include "spingraph/secular.hpp"
#include "spingraph/orbits.hpp"
#include "spingraph/stats.hpp"
#include "spingraph/rashba.hpp"
#include "spingraph/lattice.hpp"
#include "spingraph/opspec.hpp"
#include "spingraph/io.hpp"
