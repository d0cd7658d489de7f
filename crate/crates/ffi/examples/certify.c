#include <stdio.h>
#include "snakedim.h"
int main(void) {
  SnakedimSpace *s = NULL; SnakedimHierarchy *h = NULL; SnakedimOrder *o = NULL;
  SnakedimCertificate c;
  if (snakedim_space_generate(SNAKEDIM_GENERATOR_SEGMENT, 64, 0, &s)) return 2;
  if (snakedim_hierarchy_build(s, SNAKEDIM_BUILDER_BRICK, 4, 2, &h)) return 3;
  if (snakedim_order_lex(s, h, &o)) return 4;
  if (snakedim_certify(s, o, h, 1, &c)) return 5;
  printf("pass=%d bound=%zu worst=%zu\n", c.pass, c.bound, c.worst_value);
  if (snakedim_space_from_matrix(NULL, 0, &s) != SNAKEDIM_STATUS_METRIC) return 6;
  printf("%s\n", snakedim_last_error());
  snakedim_order_free(o); snakedim_hierarchy_free(h); snakedim_space_free(s);
  return 0;
}
