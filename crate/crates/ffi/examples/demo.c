/* End-to-end use of the C ABI: build two sketch halves, merge, estimate,
 * and round-trip through the wire format.
 *
 * Build from the repository root:
 *   cargo build -p skewsketch-ffi --release
 *   cc crates/ffi/examples/demo.c -Icrates/ffi/include \
 *      target/release/libskewsketch_ffi.a -lm -o demo
 */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "skewsketch.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        SksStatus status_ = (expr);                                       \
        if (status_ != SKS_STATUS_OK) {                                   \
            fprintf(stderr, "%s: %s\n", #expr,                            \
                    sks_status_message(status_));                         \
            exit(1);                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    const double alpha = 0.5;
    const uint32_t k = 200;
    const uint64_t seed = 7;

    SksSketch *front = NULL, *back = NULL;
    CHECK(sks_sketch_new(alpha, k, seed, false, &front));
    CHECK(sks_sketch_new(alpha, k, seed, false, &back));

    /* 1000 indices at mass 4.0 each, inserted as 5.0 then trimmed by 1.0,
     * split across the two sketches: F_0.5 = 1000 * sqrt(4) = 2000. */
    for (uint64_t i = 1; i <= 1000; i++) {
        CHECK(sks_sketch_update(i <= 500 ? front : back, i, 5.0));
        CHECK(sks_sketch_update(i <= 500 ? front : back, i, -1.0));
    }

    CHECK(sks_sketch_merge(front, back));
    sks_sketch_free(back);

    uint64_t count = 0;
    CHECK(sks_sketch_update_count(front, &count));

    SksEstimate est;
    CHECK(sks_sketch_estimate(front, SKS_METHOD_GM, &est));
    printf("updates=%llu estimate=%.6g (true 2000) var_factor=%.6g\n",
           (unsigned long long)count, est.estimate,
           est.asymptotic_variance_factor);

    /* Wire format round trip. */
    size_t size = 0;
    CHECK(sks_sketch_serialized_size(front, &size));
    uint8_t *buf = malloc(size);
    CHECK(sks_sketch_serialize(front, buf, size));
    SksSketch *copy = NULL;
    CHECK(sks_sketch_deserialize(buf, size, &copy));
    free(buf);

    SksEstimate again;
    CHECK(sks_sketch_estimate(copy, SKS_METHOD_GM, &again));
    if (memcmp(&again.estimate, &est.estimate, sizeof(double)) != 0) {
        fprintf(stderr, "round trip changed the estimate\n");
        exit(1);
    }

    sks_sketch_free(copy);
    sks_sketch_free(front);
    puts("ok");
    return 0;
}
