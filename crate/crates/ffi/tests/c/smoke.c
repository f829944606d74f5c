#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "bergman_gaf.h"

#define CHECK(call)                                                         \
    do {                                                                    \
        GafStatus s_ = (call);                                              \
        if (s_ != GAF_STATUS_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, gaf_last_error()); \
            return 1;                                                       \
        }                                                                   \
    } while (0)

int main(void) {
    GafBasis *basis = NULL;
    CHECK(gaf_basis_new_disk(1.0, GAF_WEIGHT_KIND_ZERO, 0.0, 1, 40, &basis));

    size_t dim = 0, degree = 0;
    double residual = 1.0;
    CHECK(gaf_basis_info(basis, &dim, &degree, NULL, &residual));
    if (dim != 41 || degree != 40 || residual > 1e-8) {
        fprintf(stderr, "unexpected basis info %zu %zu %g\n", dim, degree, residual);
        return 1;
    }

    double z[2] = {0.3, 0.1};
    double log_k = 0.0;
    CHECK(gaf_kernel_diag(basis, z, 2, &log_k, NULL));
    double r2 = 0.1;
    double exact = -log(M_PI) - 2.0 * log(1.0 - r2);
    if (fabs(log_k - exact) > 1e-6) {
        fprintf(stderr, "log kernel %.12f, expected %.12f\n", log_k, exact);
        return 1;
    }

    GafSample *sample = NULL;
    CHECK(gaf_sample_new(basis, 7, 8, 0, &sample));
    size_t count = 0;
    if (gaf_sample_coefficients(sample, NULL, 0, &count) != GAF_STATUS_BUFFER_TOO_SMALL || count != 41) {
        fprintf(stderr, "buffer protocol broken\n");
        return 1;
    }
    double *coeffs = malloc(2 * count * sizeof(double));
    CHECK(gaf_sample_coefficients(sample, coeffs, 2 * count, &count));
    free(coeffs);

    size_t nz = 0;
    double zeros[200];
    CHECK(gaf_sample_zeros(sample, 0.6, zeros, 200, &nz));
    for (size_t k = 0; k < nz; k++) {
        double re = 0.0, im = 0.0;
        CHECK(gaf_sample_eval(sample, &zeros[2 * k], 2, &re, &im));
        if (hypot(re, im) > 1e-6) {
            fprintf(stderr, "zero %zu has |f| = %g\n", k, hypot(re, im));
            return 1;
        }
    }

    if (gaf_kernel_diag(basis, z, 4, &log_k, NULL) != GAF_STATUS_INVALID_ARGUMENT) {
        fprintf(stderr, "wrong coordinate count accepted\n");
        return 1;
    }

    gaf_sample_free(sample);
    gaf_basis_free(basis);
    printf("ok %s %zu\n", gaf_version(), nz);
    return 0;
}
