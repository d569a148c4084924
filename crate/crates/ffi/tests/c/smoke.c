#include <math.h>
#include <stdio.h>

#include "mwfi.h"

int main(void) {
    MwfiModels *models = mwfi_models_new();
    MwfiCalibration *cal = NULL;
    if (mwfi_models_set_noise(models, 0.0, 1) != MWFI_STATUS_OK) return 1;
    if (mwfi_calibrate(models, &cal) != MWFI_STATUS_OK) return 2;

    MwfiScenario *scenario = mwfi_scenario_new();
    mwfi_scenario_add_tone(scenario, 14e9, 1.0);
    double freqs[4];
    size_t n = 0;
    if (mwfi_measure_tones(models, scenario, cal, freqs, 4, &n) != MWFI_STATUS_OK || n != 1) return 3;
    if (fabs(freqs[0] - 14e9) > 1e6) return 4;

    MwfiLabel label;
    if (mwfi_classify(models, scenario, &label) != MWFI_STATUS_OK || label != MWFI_LABEL_SINGLE_FREQUENCY) return 5;

    char msg[128];
    if (mwfi_calibrate(NULL, &cal) != MWFI_STATUS_NULL_POINTER) return 6;
    if (mwfi_last_error_message(msg, sizeof msg) == 0) return 7;

    printf("%.6e\n", freqs[0]);
    mwfi_scenario_free(scenario);
    mwfi_calibration_free(cal);
    mwfi_models_free(models);
    return 0;
}
