#ifndef TUNNELKIT_H
#define TUNNELKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TkStatus {
  TK_STATUS_OK = 0,
  TK_STATUS_NULL_POINTER = 1,
  TK_STATUS_INVALID_ARGUMENT = 2,
  // Solver failure: conditioning, singular denominator, step underflow.
  TK_STATUS_NUMERICAL = 3,
  TK_STATUS_NO_RESONANCE = 4,
  TK_STATUS_INDEX_OUT_OF_RANGE = 5,
  // A Rust panic was caught at the boundary.
  TK_STATUS_INTERNAL = 6,
} TkStatus;

typedef enum TkRiccatiForm {
  TK_RICCATI_FORM_COMPLEX = 0,
  TK_RICCATI_FORM_REAL = 1,
  TK_RICCATI_FORM_ALPHA = 2,
} TkRiccatiForm;

typedef enum TkOuterWalls {
  TK_OUTER_WALLS_INFINITE = 0,
  TK_OUTER_WALLS_FINITE = 1,
} TkOuterWalls;

// Opaque list of allowed bands.
typedef struct TkBandSet TkBandSet;

// Opaque list of bound levels.
typedef struct TkLevelSet TkLevelSet;

// Opaque piecewise potential.
typedef struct TkPotential TkPotential;

// Opaque multi-well system.
typedef struct TkWellSystem TkWellSystem;

// Scattering amplitudes of one element. `r` is referenced at the left
// edge, `t` and `r_rev` at the right edge; `transmittance` is
// `(k_right/k_left)|t|^2`.
typedef struct TkScatter {
  double t_re;
  double t_im;
  double r_re;
  double r_im;
  double t_rev_re;
  double t_rev_im;
  double r_rev_re;
  double r_rev_im;
  double k_left;
  double k_right;
  double width;
  double loss;
  double transmittance;
  double reflectance;
} TkScatter;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *tk_last_error(void);

void tk_clear_error(void);

// Library version as a static NUL-terminated string.
const char *tk_version(void);

double tk_from_ev(double ev);

double tk_to_ev(double e);

double tk_from_erg(double erg);

double tk_from_cm(double cm);

// Empty potential between media at `left_level` and `right_level`.
struct TkPotential *tk_potential_new(double left_level, double right_level);

// # Safety
// `p` must be null or a handle from `tk_potential_new` not yet freed.
void tk_potential_free(struct TkPotential *p);

// Append a constant segment.
//
// # Safety
// `p` must be a live potential handle.
enum TkStatus tk_potential_push_constant(struct TkPotential *p, double width, double height);

// Append a linear ramp `start + slope * t`.
//
// # Safety
// `p` must be a live potential handle.
enum TkStatus tk_potential_push_linear(struct TkPotential *p,
                                       double width,
                                       double start,
                                       double slope);

// Append a sampled profile of `n` heights on a uniform grid.
//
// # Safety
// `p` must be a live potential handle and `heights` valid for `n` reads.
enum TkStatus tk_potential_push_sampled(struct TkPotential *p,
                                        double width,
                                        const double *heights,
                                        size_t n);

// # Safety
// `p` must be a live potential handle.
size_t tk_potential_segment_count(const struct TkPotential *p);

// # Safety
// `p` must be a live potential handle.
double tk_potential_extent(const struct TkPotential *p);

// New potential with barrier widths scaled by `factor` in (0, 1].
//
// # Safety
// `p` must be a live potential handle; `out` valid for a write.
enum TkStatus tk_potential_compress(const struct TkPotential *p,
                                    double factor,
                                    struct TkPotential **out);

// Exact transfer-matrix solution at `energy`.
//
// # Safety
// `p` must be a live potential handle; `out` valid for a write.
enum TkStatus tk_solve_exact(const struct TkPotential *p, double energy, struct TkScatter *out);

// Phase-equation integration at `energy` with relative tolerance `rtol`
// (0 for the default).
//
// # Safety
// `p` must be a live potential handle; `out` valid for a write.
enum TkStatus tk_solve_riccati(const struct TkPotential *p,
                               double energy,
                               enum TkRiccatiForm form,
                               double rtol,
                               struct TkScatter *out);

// Join `left` and `right` across a free gap of `length` in a medium with
// wave number `k`.
//
// # Safety
// `left`, `right` valid for reads; `out` valid for a write.
enum TkStatus tk_compose_pair(const struct TkScatter *left,
                              double length,
                              double k,
                              const struct TkScatter *right,
                              struct TkScatter *out);

// Closed-form resonant gap of two equal rectangular barriers, branch `n`.
//
// # Safety
// `out` must be valid for a write.
enum TkStatus tk_rect_pair_resonant_l(double height,
                                      double width,
                                      double energy,
                                      int64_t n,
                                      double *out);

// Wells of `depths[i]`, `widths[i]` (`n` each) separated by `n - 1`
// barriers.
//
// # Safety
// `depths`, `widths` valid for `n` reads, `barriers` for `n - 1` (may be
// null when `n == 1`); `out` valid for a write.
enum TkStatus tk_wells_new(const double *depths,
                           const double *widths,
                           size_t n,
                           const double *barriers,
                           enum TkOuterWalls outer,
                           struct TkWellSystem **out);

// # Safety
// `ws` must be null or a live well-system handle.
void tk_wells_free(struct TkWellSystem *ws);

// Bound levels (binding energies, ascending) on an energy grid of `grid`
// points.
//
// # Safety
// `ws` must be a live handle; `out` valid for a write.
enum TkStatus tk_wells_levels(const struct TkWellSystem *ws, size_t grid, struct TkLevelSet **out);

// # Safety
// `s` must be a live level-set handle.
size_t tk_levelset_len(const struct TkLevelSet *s);

// # Safety
// `s` must be a live level-set handle; `out` valid for a write.
enum TkStatus tk_levelset_get(const struct TkLevelSet *s, size_t i, double *out);

// # Safety
// `s` must be null or a live level-set handle.
void tk_levelset_free(struct TkLevelSet *s);

// Allowed bands of the periodic lattice built from `cell`.
//
// # Safety
// `cell` must be a live potential handle; `out` valid for a write.
enum TkStatus tk_band_structure(const struct TkPotential *cell,
                                double e_lo,
                                double e_hi,
                                size_t grid,
                                struct TkBandSet **out);

// # Safety
// `s` must be a live band-set handle.
size_t tk_bandset_len(const struct TkBandSet *s);

// Edges of band `i`; `clipped` is set when the band touches the window.
//
// # Safety
// `s` must be a live band-set handle; outputs valid for writes.
enum TkStatus tk_bandset_get(const struct TkBandSet *s,
                             size_t i,
                             double *lo,
                             double *hi,
                             bool *clipped);

// # Safety
// `s` must be null or a live band-set handle.
void tk_bandset_free(struct TkBandSet *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TUNNELKIT_H */
