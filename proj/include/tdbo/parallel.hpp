#pragma once

namespace tdbo {

// Thread count used by the OpenMP kernels (the r2LEY Monte Carlo sweep and
// benchmark replications). The TDBO_THREADS environment variable, when set,
// overrides any value passed to set_threads().
void set_threads(int n);
int threads();

}  // namespace tdbo
