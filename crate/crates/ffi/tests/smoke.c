#include <stdio.h>
#include "rgv_jscc.h"

int main(void) {
    const char *toml =
        "[source]\npmf = [0.5, 0.5]\n"
        "[channel]\nbsc = 0.05\n"
        "[code]\nk = 2\nn = 8\npalette = [[4, 4]]\ndelta = 0.01\n";
    RgvExperiment *exp = NULL;
    if (rgv_experiment_from_toml(toml, &exp) != RGV_STATUS_OK) {
        fprintf(stderr, "%s\n", rgv_last_error_message());
        return 1;
    }
    RgvCodebook *cb = NULL;
    if (rgv_codebook_construct(exp, 1, &cb) != RGV_STATUS_OK) {
        return 2;
    }
    size_t len = 0;
    rgv_codebook_len(cb, &len);
    bool ok = false;
    rgv_codebook_verify(exp, cb, &ok);
    RgvErrorEstimate est;
    rgv_estimate_error(exp, 7, 200, RGV_SIM_MODE_FIXED, &est);
    char *text = NULL;
    rgv_codebook_to_text(cb, &text);
    printf("%zu %d %llu\n", len, ok ? 1 : 0, (unsigned long long)est.trials);
    rgv_string_free(text);
    rgv_codebook_free(cb);
    rgv_experiment_free(exp);
    return 0;
}
