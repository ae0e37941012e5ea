#pragma once

#include "dualtpd/bench.hpp"
#include "dualtpd/config.hpp"
#include "dualtpd/fem.hpp"
#include "dualtpd/kernels.hpp"
#include "dualtpd/mesh.hpp"
#include "dualtpd/multigrid.hpp"
#include "dualtpd/problems.hpp"
#include "dualtpd/solvers.hpp"
#include "dualtpd/sparse.hpp"
