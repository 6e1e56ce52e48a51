#include <math.h>
#include <stdio.h>
#include <string.h>
#include "wpgegen.h"

#define CHECK(call)                                                     \
    do {                                                                \
        WpgStatus s_ = (call);                                          \
        if (s_ != WPG_STATUS_OK) {                                      \
            char msg[256];                                              \
            wpg_last_error(msg, sizeof msg);                            \
            fprintf(stderr, "%s failed (%d): %s\n", #call, s_, msg);    \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(void) {
    double d = 0.4, nu = 1.0 / 12.0;
    WpgModel *model = NULL;
    WpgFilter *filter = NULL;
    WpgTree *tree = NULL;
    CHECK(wpg_model_new(&d, &nu, 1, 2.0 * M_PI, &model));
    CHECK(wpg_filter_new("db4", &filter));
    CHECK(wpg_basis_ours(&nu, 1, 6, &tree));
    if (wpg_tree_length(tree) != 64 || wpg_tree_leaf_count(tree) != 7) return 2;

    double x[64], c[64], y[64];
    for (int i = 0; i < 64; i++) x[i] = sin(0.3 * i) + 0.01 * i;
    CHECK(wpg_analyze(tree, filter, x, 64, c));
    CHECK(wpg_synthesize(tree, filter, c, 64, y));
    for (int i = 0; i < 64; i++)
        if (fabs(x[i] - y[i]) > 1e-10) return 3;

    WpgFilter *bl = NULL;
    CHECK(wpg_filter_new("bl6", &bl));
    WpgTree *none = NULL;
    if (wpg_basis_whitcher(&nu, 1, bl, 6, 0.0, &none) != WPG_STATUS_BASIS_NOT_FOUND) return 4;
    char msg[16];
    if (wpg_last_error(msg, sizeof msg) < sizeof msg || strlen(msg) != sizeof msg - 1) return 5;

    char json[512];
    size_t need = 0;
    CHECK(wpg_tree_to_json(tree, json, sizeof json, &need));
    if (need != strlen(json) + 1) return 6;

    double sim[2 * 64];
    CHECK(wpg_simulate_wp(model, tree, filter, 7, 2, sim));
    double lambda, hs, s;
    CHECK(wpg_score_s(model, tree, filter, &lambda, &hs, &s));
    if (!(s > hs && lambda > 0)) return 7;

    wpg_tree_free(tree);
    wpg_filter_free(filter);
    wpg_filter_free(bl);
    wpg_model_free(model);
    printf("ok %s\n", wpg_version());
    return 0;
}
