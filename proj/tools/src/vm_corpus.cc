// Copyright 2026 The detspace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "detspace/tools/corpus.h"

namespace detspace::tools {

namespace {

// Searches [a-z]{1,3} for the preimage of `target` (md5 of "fox").
constexpr std::string_view kMd5Vm = R"(
.equ BLOCK, 0x10000000
.equ STATE, 0x10000040
.equ CUR, 0x10000080
.equ LENV, 0x100000c0
.equ SAVE, 0x100000c4
.equ LIMIT, 4
start:
  LI r1, 1
  LI r13, LENV
  ST r1, 0(r13)
fill:
  LI r13, LENV
  LD r6, 0(r13)
  LI r9, CUR
  LI r10, 'a'
  LI r12, 1
fill_loop:
  STB r10, 0(r9)
  ADD r9, r9, r12
  SUB r6, r6, r12
  BNE r6, r0, fill_loop
try:
  JAL r15, hash_cur
  BNE r1, r0, found
  LI r13, LENV
  LD r6, 0(r13)
inc:
  BEQ r6, r0, grow
  LI r12, 1
  SUB r6, r6, r12
  LI r9, CUR
  ADD r9, r9, r6
  LDB r10, 0(r9)
  LI r12, 'z'
  BNE r10, r12, bump
  LI r12, 'a'
  STB r12, 0(r9)
  JAL r0, inc
bump:
  LI r12, 1
  ADD r10, r10, r12
  STB r10, 0(r9)
  JAL r0, try
grow:
  LI r13, LENV
  LD r6, 0(r13)
  LI r12, 1
  ADD r6, r6, r12
  ST r6, 0(r13)
  LI r12, LIMIT
  BNE r6, r12, fill
  LI r3, msg_none
  LI r4, 10
  JAL r15, print
  LI r2, 1
  HALT
found:
  LI r3, msg_found
  LI r4, 6
  JAL r15, print
  LI r3, CUR
  LI r13, LENV
  LD r4, 0(r13)
  JAL r15, print
  LI r3, msg_nl
  LI r4, 1
  JAL r15, print
  LI r2, 0
  HALT

; r3 address, r4 length
print:
  LI r1, 2
  LI r2, 0x10005
  SYS
  JR r15

; Hashes CUR[0..LENV) as one padded block; r1 = 1 when it matches.
hash_cur:
  LI r13, SAVE
  ST r15, 0(r13)
  LI r9, BLOCK
  LI r10, 64
  LI r12, 4
zero_loop:
  SUB r10, r10, r12
  ADD r11, r9, r10
  ST r0, 0(r11)
  BNE r10, r0, zero_loop
  LI r13, LENV
  LD r6, 0(r13)
  LI r7, 0
copy_loop:
  BEQ r7, r6, copy_done
  LI r11, CUR
  ADD r11, r11, r7
  LDB r10, 0(r11)
  ADD r11, r9, r7
  STB r10, 0(r11)
  LI r12, 1
  ADD r7, r7, r12
  JAL r0, copy_loop
copy_done:
  ADD r11, r9, r6
  LI r10, 0x80
  STB r10, 0(r11)
  LI r12, 8
  MUL r10, r6, r12
  ST r10, 56(r9)
  LI r13, STATE
  LI r10, 0x67452301
  ST r10, 0(r13)
  LI r10, 0xefcdab89
  ST r10, 4(r13)
  LI r10, 0x98badcfe
  ST r10, 8(r13)
  LI r10, 0x10325476
  ST r10, 12(r13)
  LI r1, BLOCK
  JAL r15, md5_block
  LI r13, STATE
  LI r11, target
  LI r7, 0
  LI r12, 16
cmp_loop:
  ADD r9, r13, r7
  LD r9, 0(r9)
  ADD r10, r11, r7
  LD r10, 0(r10)
  BNE r9, r10, cmp_miss
  LI r8, 4
  ADD r7, r7, r8
  BNE r7, r12, cmp_loop
  LI r1, 1
  JAL r0, hash_ret
cmp_miss:
  LI r1, 0
hash_ret:
  LI r13, SAVE
  LD r15, 0(r13)
  JR r15

; One MD5 compression of the block at r1 into STATE. Clobbers r1-r13.
md5_block:
  MOV r11, r1
  LI r13, STATE
  LD r2, 0(r13)
  LD r3, 4(r13)
  LD r4, 8(r13)
  LD r5, 12(r13)
  LI r6, 0
md5_round:
  LI r12, 16
  BLTU r6, r12, md5_f0
  LI r12, 32
  BLTU r6, r12, md5_f1
  LI r12, 48
  BLTU r6, r12, md5_f2
  LI r12, 0xffffffff
  XOR r7, r5, r12
  OR r7, r3, r7
  XOR r7, r4, r7
  LI r12, 7
  MUL r8, r6, r12
  JAL r0, md5_mix
md5_f0:
  XOR r7, r4, r5
  AND r7, r3, r7
  XOR r7, r5, r7
  MOV r8, r6
  JAL r0, md5_mix
md5_f1:
  XOR r7, r3, r4
  AND r7, r5, r7
  XOR r7, r4, r7
  LI r12, 5
  MUL r8, r6, r12
  LI r12, 1
  ADD r8, r8, r12
  JAL r0, md5_mix
md5_f2:
  XOR r7, r3, r4
  XOR r7, r7, r5
  LI r12, 3
  MUL r8, r6, r12
  LI r12, 5
  ADD r8, r8, r12
md5_mix:
  LI r12, 15
  AND r8, r8, r12
  LI r12, 4
  MUL r8, r8, r12
  ADD r8, r8, r11
  LD r9, 0(r8)
  ADD r7, r7, r9
  ADD r7, r7, r2
  MUL r10, r6, r12
  LI r9, md5_k
  ADD r9, r9, r10
  LD r9, 0(r9)
  ADD r7, r7, r9
  LI r9, md5_s
  ADD r9, r9, r10
  LD r9, 0(r9)
  SHL r10, r7, r9
  LI r13, 32
  SUB r9, r13, r9
  SHR r7, r7, r9
  OR r7, r7, r10
  MOV r2, r5
  MOV r5, r4
  MOV r4, r3
  ADD r3, r3, r7
  LI r12, 1
  ADD r6, r6, r12
  LI r12, 64
  BNE r6, r12, md5_round
  LI r13, STATE
  LD r9, 0(r13)
  ADD r9, r9, r2
  ST r9, 0(r13)
  LD r9, 4(r13)
  ADD r9, r9, r3
  ST r9, 4(r13)
  LD r9, 8(r13)
  ADD r9, r9, r4
  ST r9, 8(r13)
  LD r9, 12(r13)
  ADD r9, r9, r5
  ST r9, 12(r13)
  JR r15

msg_found: .ascii "found "
msg_none: .ascii "not found\n"
msg_nl: .ascii "\n"
.align 4
target: .word 0xf0d1952b, 0xc5668b9b, 0xa42236c4, 0x049aecd9
md5_k:
  .word 0xd76aa478, 0xe8c7b756, 0x242070db, 0xc1bdceee, 0xf57c0faf, 0x4787c62a, 0xa8304613, 0xfd469501
  .word 0x698098d8, 0x8b44f7af, 0xffff5bb1, 0x895cd7be, 0x6b901122, 0xfd987193, 0xa679438e, 0x49b40821
  .word 0xf61e2562, 0xc040b340, 0x265e5a51, 0xe9b6c7aa, 0xd62f105d, 0x02441453, 0xd8a1e681, 0xe7d3fbc8
  .word 0x21e1cde6, 0xc33707d6, 0xf4d50d87, 0x455a14ed, 0xa9e3e905, 0xfcefa3f8, 0x676f02d9, 0x8d2a4c8a
  .word 0xfffa3942, 0x8771f681, 0x6d9d6122, 0xfde5380c, 0xa4beea44, 0x4bdecfa9, 0xf6bb4b60, 0xbebfbc70
  .word 0x289b7ec6, 0xeaa127fa, 0xd4ef3085, 0x04881d05, 0xd9d4d039, 0xe6db99e5, 0x1fa27cf8, 0xc4ac5665
  .word 0xf4292244, 0x432aff97, 0xab9423a7, 0xfc93a039, 0x655b59c3, 0x8f0ccc92, 0xffeff47d, 0x85845dd1
  .word 0x6fa87e4f, 0xfe2ce6e0, 0xa3014314, 0x4e0811a1, 0xf7537e82, 0xbd3af235, 0x2ad7d2bb, 0xeb86d391
md5_s:
  .word 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22
  .word 5, 9, 14, 20, 5, 9, 14, 20, 5, 9, 14, 20, 5, 9, 14, 20
  .word 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23
  .word 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21
)";

// Rows [r1, r2) of C = A * B for n = r3, with A at r4, B at r5, C at r6.
constexpr std::string_view kMatmultWorker = R"(
start:
row_loop:
  BEQ r1, r2, done
  LI r7, 0
col_loop:
  BEQ r7, r3, row_next
  LI r8, 0
  LI r9, 0
  LI r12, 4
  MUL r10, r1, r3
  MUL r10, r10, r12
  ADD r10, r10, r4
  MUL r11, r7, r12
  ADD r11, r11, r5
  MUL r13, r3, r12
k_loop:
  LD r12, 0(r10)
  LD r15, 0(r11)
  MUL r12, r12, r15
  ADD r9, r9, r12
  LI r12, 4
  ADD r10, r10, r12
  ADD r11, r11, r13
  LI r12, 1
  ADD r8, r8, r12
  BNE r8, r3, k_loop
  MUL r10, r1, r3
  ADD r10, r10, r7
  LI r12, 4
  MUL r10, r10, r12
  ADD r10, r10, r6
  ST r9, 0(r10)
  LI r12, 1
  ADD r7, r7, r12
  JAL r0, col_loop
row_next:
  LI r12, 1
  ADD r1, r1, r12
  JAL r0, row_loop
done:
  LI r1, 2
  LI r2, 0
  SYS
)";

// A producer and two consumers over a four-slot ring. Consumers log their
// letter per item; the master prints the log and exits 0 when the items
// sum to 820.
constexpr std::string_view kProdCons = R"(
.equ M, 0x20000000
.equ NOTEMPTY, 0x20000010
.equ NOTFULL, 0x20000020
.equ COUNT, 0x20000030
.equ HEAD, 0x20000034
.equ TAIL, 0x20000038
.equ TAKEN, 0x2000003c
.equ SUM, 0x20000040
.equ BUF, 0x20000100
.equ LOG, 0x20000200
.equ CAP, 4
.equ ITEMS, 40
start:
  LI r1, producer
  LI r2, 0
  JAL r15, thread_spawn
  LI r1, consumer
  LI r2, 'A'
  JAL r15, thread_spawn
  LI r1, consumer
  LI r2, 'B'
  JAL r15, thread_spawn
  JAL r15, join_any
  JAL r15, join_any
  JAL r15, join_any
  LI r3, LOG+ITEMS
  LI r4, '\n'
  STB r4, 0(r3)
  LI r1, LOG
  LI r2, ITEMS+1
  JAL r15, sched_print
  LI r3, SUM
  LD r4, 0(r3)
  LI r1, 0
  LI r5, 820
  BEQ r4, r5, sum_ok
  LI r1, 1
sum_ok:
  JAL r0, thread_exit

producer:
  LI r5, 1
ploop:
  JAL r15, put_item
  LI r7, 1
  ADD r5, r5, r7
  LI r7, ITEMS+1
  BNE r5, r7, ploop
  LI r5, 0
  JAL r15, put_item
  JAL r15, put_item
  LI r1, 0
  JAL r0, thread_exit

; Puts r5, waiting while the ring is full. Keeps r15 in r9.
put_item:
  MOV r9, r15
  LI r1, M
  JAL r15, mutex_lock
pwait:
  LI r3, COUNT
  LD r4, 0(r3)
  LI r7, CAP
  BNE r4, r7, pspace
  LI r1, NOTFULL
  LI r2, M
  JAL r15, cond_wait
  JAL r0, pwait
pspace:
  LI r3, TAIL
  LD r6, 0(r3)
  LI r7, 4
  MUL r8, r6, r7
  LI r7, BUF
  ADD r8, r8, r7
  ST r5, 0(r8)
  LI r7, 1
  ADD r6, r6, r7
  LI r7, CAP
  BNE r6, r7, pnowrap
  LI r6, 0
pnowrap:
  ST r6, 0(r3)
  LI r3, COUNT
  LD r4, 0(r3)
  LI r7, 1
  ADD r4, r4, r7
  ST r4, 0(r3)
  LI r1, NOTEMPTY
  JAL r15, cond_signal
  LI r1, M
  JAL r15, mutex_unlock
  JR r9

; r1 = letter. Item 0 ends the consumer.
consumer:
  MOV r5, r1
cloop:
  LI r1, M
  JAL r15, mutex_lock
cwait:
  LI r3, COUNT
  LD r4, 0(r3)
  BNE r4, r0, citem
  LI r1, NOTEMPTY
  LI r2, M
  JAL r15, cond_wait
  JAL r0, cwait
citem:
  LI r7, 1
  SUB r4, r4, r7
  ST r4, 0(r3)
  LI r3, HEAD
  LD r6, 0(r3)
  LI r7, 4
  MUL r8, r6, r7
  LI r7, BUF
  ADD r8, r8, r7
  LD r9, 0(r8)
  LI r7, 1
  ADD r6, r6, r7
  LI r7, CAP
  BNE r6, r7, cnowrap
  LI r6, 0
cnowrap:
  ST r6, 0(r3)
  BEQ r9, r0, cpoison
  LI r3, TAKEN
  LD r6, 0(r3)
  LI r7, LOG
  ADD r8, r6, r7
  STB r5, 0(r8)
  LI r7, 1
  ADD r6, r6, r7
  ST r6, 0(r3)
  LI r3, SUM
  LD r6, 0(r3)
  ADD r6, r6, r9
  ST r6, 0(r3)
  LI r1, NOTFULL
  JAL r15, cond_signal
  LI r1, M
  JAL r15, mutex_unlock
  JAL r0, cloop
cpoison:
  LI r1, NOTFULL
  JAL r15, cond_signal
  LI r1, M
  JAL r15, mutex_unlock
  LI r1, 0
  JAL r0, thread_exit
)";

// Three workers add 1 to COUNT 200 times each under mutex M; exits 0 when
// the total is 600.
constexpr std::string_view kMutexCount = R"(
.equ M, 0x20000000
.equ COUNT, 0x20000010
start:
  LI r5, 0
  LI r6, 3
spawn_loop:
  LI r1, worker
  MOV r2, r5
  JAL r15, thread_spawn
  LI r7, 1
  ADD r5, r5, r7
  BNE r5, r6, spawn_loop
  LI r5, 0
join_loop:
  JAL r15, join_any
  LI r7, 1
  ADD r5, r5, r7
  BNE r5, r6, join_loop
  LI r3, COUNT
  LD r4, 0(r3)
  LI r1, 0
  LI r5, 600
  BEQ r4, r5, count_ok
  LI r1, 1
count_ok:
  JAL r0, thread_exit
worker:
  LI r5, 0
  LI r6, 200
wloop:
  LI r1, M
  JAL r15, mutex_lock
  LI r3, COUNT
  LD r4, 0(r3)
  LI r7, 1
  ADD r4, r4, r7
  ST r4, 0(r3)
  LI r1, M
  JAL r15, mutex_unlock
  LI r7, 1
  ADD r5, r5, r7
  BNE r5, r6, wloop
  LI r1, 0
  JAL r0, thread_exit
)";

}  // namespace

std::string_view md5vm_source() { return kMd5Vm; }
std::string_view matmult_worker_source() { return kMatmultWorker; }
std::string_view prodcons_source() { return kProdCons; }
std::string_view mutexcount_source() { return kMutexCount; }

}  // namespace detspace::tools
