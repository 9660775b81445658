#ifndef TREE_CRDT_H
#define TREE_CRDT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TreeStatus {
  TREE_STATUS_OK = 0,
  TREE_STATUS_NULL_POINTER = 1,
  TREE_STATUS_INVALID_UTF8 = 2,
  TREE_STATUS_PRECONDITION_VIOLATION = 3,
  TREE_STATUS_ILLEGAL_COMBO = 4,
  TREE_STATUS_KIND_MISMATCH = 5,
  TREE_STATUS_PARSE = 6,
  TREE_STATUS_WIRE = 7,
  TREE_STATUS_SEVERAL_BLOWUP = 8,
  TREE_STATUS_INVALID_INTERVAL = 9,
  TREE_STATUS_PANIC = 10,
} TreeStatus;

/**
 * Opaque replica handle.
 */
typedef struct TreeReplica TreeReplica;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a replica. `combo` uses the `key=value` form, e.g.
 * `"repr=graph set=or flavor=op connect=skip map=zero pi=none"`.
 *
 * # Safety
 * `combo` must be a valid C string and `out` a valid pointer.
 */
enum TreeStatus tree_replica_new(const char *combo,
                                 uint32_t replica_id,
                                 uint64_t seed,
                                 struct TreeReplica **out);

/**
 * # Safety
 * `replica` must come from [`tree_replica_new`] and not be used afterwards.
 */
void tree_replica_free(struct TreeReplica *replica);

/**
 * Adds `label` below the node `parent` at sibling `index` (negative for
 * last). On success `op_out` receives the op to ship to other replicas.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum TreeStatus tree_replica_add(struct TreeReplica *replica,
                                 const char *label,
                                 const char *parent,
                                 int64_t index,
                                 char **op_out);

/**
 * Removes the node `key` with its subtree.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum TreeStatus tree_replica_rmv(struct TreeReplica *replica, const char *key, char **op_out);

/**
 * Delivers an op produced by another replica. Ops whose causal
 * predecessors are missing are held back until those arrive.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum TreeStatus tree_replica_apply(struct TreeReplica *replica, const char *op);

/**
 * Joins the state of `other` into `replica` (state-based configurations).
 *
 * # Safety
 * Both handles must be valid and distinct.
 */
enum TreeStatus tree_replica_merge(struct TreeReplica *replica, const struct TreeReplica *other);

/**
 * Writes the indented outline of the replica's current tree to `out`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TreeStatus tree_replica_dump(const struct TreeReplica *replica, char **out);

/**
 * Output of one of the canned demos (`cycle`, `orphan-policies`,
 * `word-example`, `wootr-abc`).
 *
 * # Safety
 * Pointers must be valid; `name` NUL-terminated.
 */
enum TreeStatus tree_demo(const char *name, char **out);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void tree_string_free(char *s);

/**
 * Message of the last failure on this thread. Valid until the next call
 * into the library from the same thread; never null.
 */
const char *tree_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREE_CRDT_H */
