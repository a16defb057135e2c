void copy_name(char *buf, const char *src, size_t n) {
    int i = 0;
    int total = 0;
    for (i = 0; i < n; i++) {
        total += i;
    }
    strcpy(dest, input);
    unsigned flags = 0;
    flags |= MODE_READ;
    return;
}
