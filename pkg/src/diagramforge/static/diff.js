/** Line-level diff over a longest-common-subsequence alignment. */
export function lineDiff(before, after) {
    const a = before.split("\n");
    const b = after.split("\n");
    // lcs[i][j] = LCS length of a[i..] vs b[j..]
    const lcs = Array.from({ length: a.length + 1 }, () => new Array(b.length + 1).fill(0));
    for (let i = a.length - 1; i >= 0; i--) {
        for (let j = b.length - 1; j >= 0; j--) {
            lcs[i][j] =
                a[i] === b[j]
                    ? lcs[i + 1][j + 1] + 1
                    : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
        }
    }
    const out = [];
    let i = 0;
    let j = 0;
    while (i < a.length && j < b.length) {
        if (a[i] === b[j]) {
            out.push({ kind: "same", text: a[i] });
            i++;
            j++;
        }
        else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
            out.push({ kind: "removed", text: a[i] });
            i++;
        }
        else {
            out.push({ kind: "added", text: b[j] });
            j++;
        }
    }
    for (; i < a.length; i++)
        out.push({ kind: "removed", text: a[i] });
    for (; j < b.length; j++)
        out.push({ kind: "added", text: b[j] });
    return out;
}
