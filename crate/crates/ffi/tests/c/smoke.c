#include <stdio.h>
#include <string.h>

#include "girsanov_verdict.h"

int main(void) {
    GvField *field = NULL;
    if (gv_field_new_1d(GV_DOMAIN_REAL_LINE, "0", "1", "1", 0.0, &field) != GV_STATUS_OK) {
        fprintf(stderr, "field: %s\n", gv_last_error());
        return 1;
    }
    GvAcVerdict v;
    if (gv_classify_1d(field, &v) != GV_STATUS_OK) {
        fprintf(stderr, "classify: %s\n", gv_last_error());
        return 1;
    }
    gv_field_free(field);
    if (gv_expression_parse("x +", &(GvExpression *){NULL}) != GV_STATUS_PARSE_ERROR || gv_last_error() == NULL) {
        return 1;
    }
    printf("local=%d global=%d plus2=%d\n", v.local_ac, v.global_ac, v.battery[1]);
    return v.local_ac == GV_TRI_YES && v.global_ac == GV_TRI_NO ? 0 : 1;
}
