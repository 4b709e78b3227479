#pragma once

// Nondistortionary belief-elicitation toolkit: payment scheme construction
// (CSR, BDM, joint BDM), alignment certification via adjacency graphs and
// Kirchhoff potentials, and brute-force grid verification. Everything is
// templated on the scalar: elicit::Rational for exact decisions, double for
// large sweeps.

#include "adjacency.hpp"
#include "alignment.hpp"
#include "certificate.hpp"
#include "edge_flow.hpp"
#include "graph.hpp"
#include "grid.hpp"
#include "jsonio.hpp"
#include "linalg.hpp"
#include "lp.hpp"
#include "mechanisms.hpp"
#include "model.hpp"
#include "numeric.hpp"
#include "verify.hpp"
