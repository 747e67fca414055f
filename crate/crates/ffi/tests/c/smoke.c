#include <math.h>
#include <stdio.h>
#include "deflatecrb.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            const char *e = dcrb_last_error();                        \
            fprintf(stderr, "line %d: %s\n", __LINE__, e ? e : "");  \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    /* 4 x 2 signal block and 4 x 1 interference column, column-major */
    double a[8] = {1, 0, 0, 0, 0, 1, 0, 0};
    double b[4] = {0, 0, 1, 0};
    double v = 0;
    CHECK(dcrb_ecrb_deflated(a, b, 4, 2, 1, 0.5, &v) == DCRB_STATUS_OK);
    CHECK(fabs(v - 0.5) < 1e-12);
    CHECK(dcrb_ecrb_ideal(a, 4, 2, -1.0, &v) == DCRB_STATUS_INVALID_ARGUMENT);
    CHECK(dcrb_last_error() != NULL);

    DcrbMpSupport s;
    CHECK(dcrb_mp_support(9.0, &s) == DCRB_STATUS_OK);
    CHECK(s.lambda_minus == 4.0 && s.lambda_plus == 16.0);

    DcrbScenario *sc = NULL;
    CHECK(dcrb_scenario_figure(4, 1, 2, &sc) == DCRB_STATUS_OK);
    double snr[1] = {20.0};
    CHECK(dcrb_scenario_set_snr_grid(sc, snr, 1) == DCRB_STATUS_OK);
    DcrbResult *r = NULL;
    CHECK(dcrb_experiment_run(sc, 1, &r) == DCRB_STATUS_OK);
    CHECK(dcrb_result_row_count(r) == 8);
    DcrbRow row;
    CHECK(dcrb_result_row(r, 0, &row) == DCRB_STATUS_OK);
    CHECK(row.n == 100 && row.trials_ok == 2);
    CHECK(dcrb_result_row_label(r, 0) != NULL);
    dcrb_result_free(r);
    dcrb_scenario_free(sc);

    printf("ok %s\n", dcrb_version());
    return 0;
}
