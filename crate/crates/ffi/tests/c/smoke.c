#include <math.h>
#include <stdio.h>
#include <string.h>

#include "qrforms.h"

int main(void) {
    QrfMap *f = NULL;
    double k = 3.0;
    if (qrf_map_new("winding2d", &k, 1, &f) != QRF_STATUS_OK) {
        fprintf(stderr, "map: %s\n", qrf_last_error());
        return 1;
    }
    double x[2] = {0.5, 0.0}, y[2];
    if (qrf_map_eval(f, x, 2, y) != QRF_STATUS_OK || fabs(y[0] - 0.5) > 1e-12) {
        return 2;
    }
    int64_t index = 0;
    double residual = 1.0, origin[2] = {0.0, 0.0};
    if (qrf_local_index(f, origin, 0.2, &index, &residual) != QRF_STATUS_OK || index != 3) {
        return 3;
    }
    qrf_map_free(f);
    if (qrf_map_new("spiral", NULL, 0, &f) != QRF_STATUS_INVALID_ARGUMENT || f != NULL) {
        return 4;
    }
    if (strstr(qrf_last_error(), "spiral") == NULL) {
        return 5;
    }
    printf("ok %s\n", qrf_version());
    return 0;
}
