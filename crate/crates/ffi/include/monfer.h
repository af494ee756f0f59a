#ifndef MONFER_H
#define MONFER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum MonferStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  MONFER_STATUS_OK = 0,
  MONFER_STATUS_NULL_POINTER = 1,
  MONFER_STATUS_INVALID_ARGUMENT = 2,
  MONFER_STATUS_NUMERICAL = 3,
  MONFER_STATUS_INSUFFICIENT_DATA = 4,
  MONFER_STATUS_BUFFER_TOO_SMALL = 5,
  MONFER_STATUS_IO = 6,
  MONFER_STATUS_PANIC = 7,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum MonferStatus MonferStatus;
#else
typedef int32_t MonferStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Periodic hypercubic lattice.
typedef struct MonferLattice MonferLattice;

// Set of sites defining a subsystem.
typedef struct MonferMask MonferMask;

// Gaussian trajectory with its evolution parameters.
typedef struct MonferTrajectory MonferTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *monfer_last_error(void);

// Library version as a static NUL-terminated string.
const char *monfer_version(void);

// # Safety
// `out` must be a valid pointer to a handle slot.
MonferStatus monfer_lattice_new(size_t dim, size_t size, struct MonferLattice **out);

// # Safety
// `lattice` must come from `monfer_lattice_new` and not be used afterwards.
void monfer_lattice_free(struct MonferLattice *lattice);

// # Safety
// `lattice` must be a live handle or null (returns 0).
size_t monfer_lattice_num_sites(const struct MonferLattice *lattice);

// Subsystem from a geometry tag: `halfcut`, `checkerboard` or
// `strip<width>[@<offset>]`.
//
// # Safety
// `lattice` must be live, `geometry` NUL-terminated, `out` valid.
MonferStatus monfer_mask_new(const struct MonferLattice *lattice,
                             const char *geometry,
                             struct MonferMask **out);

// # Safety
// `mask` must come from `monfer_mask_new` and not be used afterwards.
void monfer_mask_free(struct MonferMask *mask);

// # Safety
// `mask` must be a live handle or null (returns 0).
size_t monfer_mask_len(const struct MonferMask *mask);

// Half-filled trajectory at monitoring rate `gamma` with step `dt`.
// `initial` is `random_gaussian` or `neel`. Trajectory `id` of master
// seed `seed` gives the same noise as the command-line runs.
//
// # Safety
// `lattice` must be live, `initial` NUL-terminated, `out` valid.
MonferStatus monfer_trajectory_new(const struct MonferLattice *lattice,
                                   double gamma,
                                   double dt,
                                   const char *initial,
                                   uint64_t seed,
                                   uint64_t id,
                                   struct MonferTrajectory **out);

// # Safety
// `traj` must come from `monfer_trajectory_new` and not be used afterwards.
void monfer_trajectory_free(struct MonferTrajectory *traj);

// Advances by `steps` time steps.
//
// # Safety
// `traj` must be live.
MonferStatus monfer_trajectory_step(struct MonferTrajectory *traj, uint64_t steps);

// # Safety
// `traj` must be live or null (returns NaN).
double monfer_trajectory_time(const struct MonferTrajectory *traj);

// Site occupations `<n_l>`.
//
// # Safety
// `traj` must be live; `out` must hold `capacity` doubles; `out_len` valid.
MonferStatus monfer_trajectory_occupations(const struct MonferTrajectory *traj,
                                           double *out,
                                           size_t capacity,
                                           size_t *out_len);

// Von Neumann entanglement entropy of `mask`.
//
// # Safety
// Handles must be live and built on the same lattice; `out` valid.
MonferStatus monfer_trajectory_entropy(const struct MonferTrajectory *traj,
                                       const struct MonferMask *mask,
                                       double *out);

// Entanglement-Hamiltonian single-particle energies of `mask`, ascending.
// Saturated levels are included at the clamp energy; their number is
// written to `out_saturated` when it is not null.
//
// # Safety
// Handles must be live; `out` must hold `capacity` doubles; `out_len`
// valid; `out_saturated` valid or null.
MonferStatus monfer_trajectory_spectrum(const struct MonferTrajectory *traj,
                                        const struct MonferMask *mask,
                                        double *out,
                                        size_t capacity,
                                        size_t *out_len,
                                        size_t *out_saturated);

// Mean of `min(r, 1/r)` over one ascending spectrum.
//
// # Safety
// `levels` must hold `n` doubles; `out` valid.
MonferStatus monfer_mean_gap_ratio(const double *levels, size_t n, double *out);

// Average entanglement entropy of a subsystem of `l` sites in a random
// Gaussian state on `size` sites.
//
// # Safety
// `out` must be valid.
MonferStatus monfer_page_law_density(size_t l, size_t size, double *out);

// Digamma function for `z > 0`.
//
// # Safety
// `out` must be valid.
MonferStatus monfer_digamma(double z, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONFER_H */
