#ifndef PREFIXSIM_H
#define PREFIXSIM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_DOMAIN = 2,
  PS_STATUS_CAPABILITY = 3,
  PS_STATUS_PRECONDITION = 4,
  PS_STATUS_INCONSISTENCY = 5,
  PS_STATUS_FORMAT = 6,
  PS_STATUS_IO = 7,
  PS_STATUS_PANIC = 8,
} PsStatus;

/*
 A lazy simulation over a tree, with its own sampling stream.
 */
typedef struct PsSimulation PsSimulation;

/*
 A distribution over `{0,1}^n` given by its marginal tree.
 */
typedef struct PsTree PsTree;

/*
 The message of the last failed call on this thread, or NULL. Valid until
 the next failing call on the same thread.
 */
const char *ps_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/*
 A tree from its `2^n − 1` marginals in heap order (root first, children of
 node `i` at `2i+1` and `2i+2`).

 # Safety
 `f` must point to `len` doubles; `out` must be writable.
 */
enum PsStatus ps_tree_from_table(size_t n, const double *f, size_t len, struct PsTree **out);

/*
 The uniform distribution over `{0,1}^n`.

 # Safety
 `out` must be writable.
 */
enum PsStatus ps_tree_uniform(size_t n, struct PsTree **out);

/*
 A tree from `{"n": ..., "f": {prefix: value}}`.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PsStatus ps_tree_from_json(const char *json, struct PsTree **out);

/*
 # Safety
 `tree` must come from this library and not be used afterwards. NULL is a
 no-op.
 */
void ps_tree_free(struct PsTree *tree);

/*
 Length `n` of the strings the tree is over; 0 for NULL.

 # Safety
 `tree` must be NULL or a live handle.
 */
size_t ps_tree_n(const struct PsTree *tree);

/*
 `μ(x)`.

 # Safety
 `tree` must be a live handle, `x` must point to `len` bytes, `out` must be
 writable.
 */
enum PsStatus ps_tree_mass(const struct PsTree *tree, const uint8_t *x, size_t len, double *out);

/*
 Exact total variation distance (`n ≤ 24`).

 # Safety
 Handles must be live; `out` must be writable.
 */
enum PsStatus ps_tv_distance(const struct PsTree *a, const struct PsTree *b, double *out);

/*
 Exact `D_KL(a‖b)` in bits (`n ≤ 24`), possibly infinite.

 # Safety
 Handles must be live; `out` must be writable.
 */
enum PsStatus ps_kl_divergence(const struct PsTree *a, const struct PsTree *b, double *out);

/*
 Starts a lazy simulation at accuracy `delta` over a copy of `tree`.
 `seed` keys the edge estimates and the sampling stream.

 # Safety
 `tree` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_simulation_new(const struct PsTree *tree,
                                double delta,
                                uint64_t seed,
                                struct PsSimulation **out);

/*
 # Safety
 `sim` must come from this library and not be used afterwards. NULL is a
 no-op.
 */
void ps_simulation_free(struct PsSimulation *sim);

/*
 Simulated mass of `x`.

 # Safety
 `sim` must be a live handle, `x` must point to `len` bytes, `out` must be
 writable.
 */
enum PsStatus ps_simulation_query(struct PsSimulation *sim,
                                  const uint8_t *x,
                                  size_t len,
                                  double *out);

/*
 Draws from the simulated distribution. Writes `n` bytes to `x` and the
 simulated mass to `p`.

 # Safety
 `sim` must be a live handle, `x` must have room for `len` bytes, `p` must
 be writable.
 */
enum PsStatus ps_simulation_sample(struct PsSimulation *sim, uint8_t *x, size_t len, double *p);

/*
 Conditional samples spent so far.

 # Safety
 `sim` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_simulation_budget(const struct PsSimulation *sim, uint64_t *out);

/*
 `E_{t∼Bin(m,p)}[D_KL(t/m, p)]` in bits, `1 ≤ m ≤ 64`.

 # Safety
 `out` must be writable.
 */
enum PsStatus ps_expected_binomial_kl(uint64_t m, double p, double *out);

/*
 Whether `(1−ε)p_H > (1+ε)p_L` at length `n`.

 # Safety
 `out` must be writable.
 */
enum PsStatus ps_check_gap(double n, double epsilon, bool *out);

/*
 Runs the Poissonized tester on the hidden vector `p`. Writes whether it
 accepted and how many draws it made.

 # Safety
 `p` must point to `len` doubles; `accept` and `draws` must be writable.
 */
enum PsStatus ps_test_ad_hoc(const double *p,
                             size_t len,
                             double delta,
                             double r,
                             uint64_t seed,
                             bool *accept,
                             uint64_t *draws);

#endif  /* PREFIXSIM_H */
