#pragma once

// Thin RAII wrapper over GSL's Nelder-Mead simplex (nmsimplex2).

#include <functional>
#include <memory>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace zl::detail {

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

struct SimplexOptions {
  double initial_step = 0.1;
  double size_tolerance = 1e-10;
  int max_iterations = 4000;
};

inline MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                                  std::vector<double> start, const SimplexOptions& opts = {}) {
  const std::size_t dim = start.size();
  if (dim == 0) return {start, objective(start), 0};

  struct Context {
    const std::function<double(const std::vector<double>&)>* f;
    std::vector<double> scratch;
  } ctx{&objective, std::vector<double>(dim)};

  gsl_multimin_function fn;
  fn.n = dim;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* params) {
    auto* c = static_cast<Context*>(params);
    for (std::size_t i = 0; i < c->scratch.size(); ++i) c->scratch[i] = gsl_vector_get(v, i);
    return (*c->f)(c->scratch);
  };

  auto free_vec = [](gsl_vector* v) { gsl_vector_free(v); };
  std::unique_ptr<gsl_vector, decltype(free_vec)> x(gsl_vector_alloc(dim), free_vec);
  std::unique_ptr<gsl_vector, decltype(free_vec)> step(gsl_vector_alloc(dim), free_vec);
  for (std::size_t i = 0; i < dim; ++i) gsl_vector_set(x.get(), i, start[i]);
  gsl_vector_set_all(step.get(), opts.initial_step);

  auto free_min = [](gsl_multimin_fminimizer* m) { gsl_multimin_fminimizer_free(m); };
  std::unique_ptr<gsl_multimin_fminimizer, decltype(free_min)> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim), free_min);
  gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), step.get());

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
    const double size = gsl_multimin_fminimizer_size(solver.get());
    if (gsl_multimin_test_size(size, opts.size_tolerance) == GSL_SUCCESS) break;
  }

  MinimizeResult out;
  out.x.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) out.x[i] = gsl_vector_get(solver->x, i);
  out.value = solver->fval;
  out.iterations = iter;
  return out;
}

}  // namespace zl::detail
